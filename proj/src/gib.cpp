#include "goanet/gib.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "goanet/errors.hpp"
#include "goanet/rng.hpp"

namespace goanet::gib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kUninformativeTol = 1e-10;   // lambda >= 1 - tol carries nothing
constexpr double kDeterministicTol = 1e-12;   // lambda below this needs unbounded gain

void check_symmetric(const Eigen::MatrixXd& m, const char* name) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ConfigError(std::string(name) + " is not symmetric within 1e-10 relative");
  }
}

Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError("self-adjoint eigensolver failed to converge");
  }
  return es.eigenvalues();
}

}  // namespace

GaussianSource make_source(Eigen::MatrixXd cov_x, Eigen::MatrixXd cov_y,
                           Eigen::MatrixXd cov_xy) {
  const auto dx = cov_x.rows();
  const auto dy = cov_y.rows();
  if (dx < 1 || dy < 1 || cov_x.cols() != dx || cov_y.cols() != dy ||
      cov_xy.rows() != dx || cov_xy.cols() != dy) {
    throw ConfigError("source covariance blocks have inconsistent dimensions");
  }
  check_symmetric(cov_x, "cov_x");
  check_symmetric(cov_y, "cov_y");
  if (sym_eigenvalues(cov_x).minCoeff() <= 1e-10) {
    throw ConfigError("cov_x must have eigenvalues > 1e-10");
  }
  if (sym_eigenvalues(cov_y).minCoeff() <= 1e-10) {
    throw ConfigError("cov_y must have eigenvalues > 1e-10");
  }
  Eigen::MatrixXd joint(dx + dy, dx + dy);
  joint.topLeftCorner(dx, dx) = cov_x;
  joint.topRightCorner(dx, dy) = cov_xy;
  joint.bottomLeftCorner(dy, dx) = cov_xy.transpose();
  joint.bottomRightCorner(dy, dy) = cov_y;
  if (sym_eigenvalues(joint).minCoeff() < -1e-8) {
    throw ConfigError("joint covariance is not positive semidefinite");
  }
  return GaussianSource{std::move(cov_x), std::move(cov_y), std::move(cov_xy)};
}

GaussianSource synthetic_source(int dim_x, int dim_y, std::uint64_t seed,
                                double correlation) {
  if (dim_x < 1 || dim_y < 1) throw ConfigError("synthetic source dims must be >= 1");
  if (correlation < 0.0 || correlation >= 1.0) {
    throw ConfigError("synthetic source correlation must lie in [0, 1)");
  }
  rng::Stream stream(seed, 0x736f7572u /* "sour" */);
  auto random_spd = [&](int d) {
    Eigen::MatrixXd g(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g(i, j) = stream.next_normal();
    Eigen::MatrixXd s = g * g.transpose() / static_cast<double>(d);
    s += 0.1 * Eigen::MatrixXd::Identity(d, d);
    return s;
  };
  Eigen::MatrixXd cov_x = random_spd(dim_x);
  Eigen::MatrixXd cov_y = random_spd(dim_y);

  // Couple through canonical correlations: the joint covariance
  // [[Sx, Lx K Ly^T], [., Sy]] is PSD iff the singular values of K are <= 1.
  Eigen::MatrixXd k(dim_x, dim_y);
  for (int i = 0; i < dim_x; ++i)
    for (int j = 0; j < dim_y; ++j) k(i, j) = stream.next_normal();
  if (correlation > 0.0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(k);
    k *= correlation / svd.singularValues()(0);
  } else {
    k.setZero();
  }
  const Eigen::MatrixXd lx = cov_x.llt().matrixL();
  const Eigen::MatrixXd ly = cov_y.llt().matrixL();
  return make_source(std::move(cov_x), std::move(cov_y), lx * k * ly.transpose());
}

Eigen::MatrixXd conditional_covariance(const GaussianSource& s) {
  const Eigen::VectorXd ev = sym_eigenvalues(s.cov_y);
  if (ev.minCoeff() <= 0.0 || ev.maxCoeff() / ev.minCoeff() > 1e12) {
    throw NumericalError("cov_y is ill-conditioned (condition number > 1e12)");
  }
  Eigen::MatrixXd cond =
      s.cov_x - s.cov_xy * s.cov_y.ldlt().solve(s.cov_xy.transpose());
  cond = 0.5 * (cond + cond.transpose().eval());
  return cond;
}

std::vector<double> critical_betas(const Eigen::VectorXd& eigenvalues) {
  std::vector<double> out(static_cast<std::size_t>(eigenvalues.size()));
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const double lam = eigenvalues(i);
    out[static_cast<std::size_t>(i)] =
        (lam >= 1.0 - kUninformativeTol) ? kInf : 1.0 / (1.0 - lam);
  }
  return out;
}

int Spectrum::usable_components() const {
  int n = 0;
  for (Eigen::Index i = 0; i < eigenvalues.size() && i < dim_min; ++i) {
    if (eigenvalues(i) < 1.0 - kUninformativeTol) ++n;
  }
  return n;
}

Spectrum compute_spectrum(const GaussianSource& s) {
  const Eigen::MatrixXd cond = conditional_covariance(s);
  const Eigen::LLT<Eigen::MatrixXd> llt(s.cov_x);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("cov_x Cholesky factorization failed");
  }
  const Eigen::MatrixXd l = llt.matrixL();
  // Whitened form: L^-1 Sigma_{x|y} L^-T shares eigenvalues with
  // Sigma_{x|y} Sigma_x^-1 and is symmetric PSD.
  Eigen::MatrixXd white = l.triangularView<Eigen::Lower>().solve(cond);
  white = l.triangularView<Eigen::Lower>()
              .solve(Eigen::MatrixXd(white.transpose()))
              .transpose();
  white = 0.5 * (white + white.transpose().eval());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(white);
  if (es.info() != Eigen::Success) {
    throw NumericalError("whitened eigenproblem failed to converge");
  }

  Spectrum sp;
  sp.dim_min = s.dim_min();
  sp.eigenvalues = es.eigenvalues();  // ascending
  for (Eigen::Index i = 0; i < sp.eigenvalues.size(); ++i) {
    double& lam = sp.eigenvalues(i);
    if (lam < -1e-8 || lam > 1.0 + 1e-8) {
      throw NumericalError("whitened eigenvalue outside [0, 1] beyond tolerance: " +
                           std::to_string(lam));
    }
    lam = std::clamp(lam, 0.0, 1.0);
  }

  // Left eigenvectors v = L^-T u, sign-normalized so the largest-magnitude
  // entry is positive.
  const int dx = s.dim_x();
  sp.left_eigenvectors.resize(dx, dx);
  for (int i = 0; i < dx; ++i) {
    Eigen::VectorXd v = l.transpose().triangularView<Eigen::Upper>().solve(
        es.eigenvectors().col(i));
    int arg_max = 0;
    v.cwiseAbs().maxCoeff(&arg_max);
    if (v(arg_max) < 0.0) v = -v;
    sp.left_eigenvectors.row(i) = v.transpose();
  }
  sp.r.resize(dx);
  for (int i = 0; i < dx; ++i) {
    sp.r(i) = sp.left_eigenvectors.row(i) * s.cov_x *
              sp.left_eigenvectors.row(i).transpose();
  }
  sp.critical_betas = critical_betas(sp.eigenvalues);
  return sp;
}

int active_components(const Spectrum& sp, double beta) {
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  const double threshold = (beta - 1.0) / beta;
  int n = 0;
  for (Eigen::Index i = 0; i < sp.eigenvalues.size() && i < sp.dim_min; ++i) {
    if (sp.eigenvalues(i) < threshold) ++n;
  }
  return n;
}

std::vector<double> beta_grid(const Spectrum& sp) {
  const int usable = sp.usable_components();
  if (usable == 0) {
    throw DomainError("beta grid is empty: source has no informative component");
  }
  std::vector<double> grid;
  for (int i = 1; i < usable; ++i) grid.push_back(sp.critical_betas[static_cast<std::size_t>(i)]);
  grid.push_back(10.0 * sp.critical_betas[static_cast<std::size_t>(usable - 1)]);
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

Projection projection(const Spectrum& sp, const GaussianSource& s, double beta) {
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  Projection p;
  p.beta = beta;
  p.n_beta = active_components(sp, beta);
  p.matrix_a = Eigen::MatrixXd::Zero(sp.dim_min, s.dim_x());
  p.alphas = Eigen::VectorXd::Zero(p.n_beta);
  for (int i = 0; i < p.n_beta; ++i) {
    const double lam = sp.eigenvalues(i);
    if (lam < kDeterministicTol) {
      throw NumericalError(
          "component with vanishing conditional variance requires unbounded "
          "encoder gain");
    }
    const double radicand = (beta * (1.0 - lam) - 1.0) / (lam * sp.r(i));
    p.alphas(i) = std::sqrt(std::max(0.0, radicand));
    p.matrix_a.row(i) = p.alphas(i) * sp.left_eigenvectors.row(i);
  }
  return p;
}

std::pair<double, double> mutual_informations(const Spectrum& sp, double beta) {
  const int n = active_components(sp, beta);
  double i_xz = 0.0;
  double penalty = 0.0;
  for (int i = 0; i < n; ++i) {
    const double lam = sp.eigenvalues(i);
    if (lam < kDeterministicTol) {
      throw NumericalError("mutual information unbounded: deterministic component");
    }
    i_xz += 0.5 * std::log2((beta - 1.0) * (1.0 - lam) / lam);
    penalty += 0.5 * std::log2(beta * (1.0 - lam));
  }
  i_xz = std::max(0.0, i_xz);
  const double i_zy = std::max(0.0, i_xz - penalty);
  return {i_xz, i_zy};
}

std::pair<Eigen::MatrixXd, double> decoder_and_nmse(const GaussianSource& s,
                                                    const Projection& p) {
  Eigen::MatrixXd decoder = Eigen::MatrixXd::Zero(s.dim_y(), p.matrix_a.rows());
  if (p.n_beta == 0) return {decoder, 1.0};

  const int n = p.n_beta;
  const Eigen::MatrixXd a = p.matrix_a.topRows(n);
  const Eigen::MatrixXd cov_z =
      a * s.cov_x * a.transpose() + Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd ev = sym_eigenvalues(cov_z);
  if (ev.minCoeff() <= 0.0 || ev.maxCoeff() / ev.minCoeff() > 1e12) {
    throw NumericalError("z covariance is ill-conditioned");
  }
  const Eigen::MatrixXd cov_yz = s.cov_xy.transpose() * a.transpose();
  const Eigen::MatrixXd m =
      cov_z.ldlt().solve(cov_yz.transpose()).transpose();  // Sigma_yz Sigma_z^-1
  decoder.leftCols(n) = m;
  double nmse = 1.0 - (m * cov_yz.transpose()).trace() / s.cov_y.trace();
  nmse = std::clamp(nmse, 0.0, 1.0);
  return {decoder, nmse};
}

double entropy_bits_from_cov(const Eigen::MatrixXd& cov_z, int n_beta) {
  if (n_beta == 0) return 0.0;
  const Eigen::LLT<Eigen::MatrixXd> llt(cov_z);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("z covariance is not positive definite");
  }
  double log2_det = 0.0;
  const Eigen::MatrixXd l = llt.matrixL();
  for (int i = 0; i < cov_z.rows(); ++i) log2_det += 2.0 * std::log2(l(i, i));
  const double two_pi_e_log2 = std::log2(2.0 * M_PI * M_E);
  const double differential = 0.5 * (n_beta * two_pi_e_log2 + log2_det);
  return std::max(differential, static_cast<double>(n_beta));
}

double z_entropy_bits(const GaussianSource& s, const Projection& p) {
  if (p.n_beta == 0) return 0.0;
  const Eigen::MatrixXd a = p.matrix_a.topRows(p.n_beta);
  const Eigen::MatrixXd cov_z =
      a * s.cov_x * a.transpose() +
      Eigen::MatrixXd::Identity(p.n_beta, p.n_beta);
  return entropy_bits_from_cov(cov_z, p.n_beta);
}

RatePoint rate_point(const GaussianSource& s, const Spectrum& sp, double beta) {
  const Projection p = projection(sp, s, beta);
  const auto [i_xz, i_zy] = mutual_informations(sp, beta);
  const auto [decoder, nmse] = decoder_and_nmse(s, p);
  (void)decoder;
  return RatePoint{beta, i_xz, i_zy, nmse, z_entropy_bits(s, p)};
}

}  // namespace goanet::gib
