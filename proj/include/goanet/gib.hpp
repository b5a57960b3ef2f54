#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace goanet::gib {

// Joint zero-mean Gaussian pair (x, y) described by its covariance blocks.
// Defines one device's inference task: x is observed, y must be estimated.
struct GaussianSource {
  Eigen::MatrixXd cov_x;   // d_x x d_x
  Eigen::MatrixXd cov_y;   // d_y x d_y
  Eigen::MatrixXd cov_xy;  // d_x x d_y

  int dim_x() const { return static_cast<int>(cov_x.rows()); }
  int dim_y() const { return static_cast<int>(cov_y.rows()); }
  int dim_min() const { return dim_x() < dim_y() ? dim_x() : dim_y(); }
};

// Validates symmetry (1e-10 relative), positive-definite marginals
// (eigenvalues > 1e-10) and joint positive semidefiniteness (min eigenvalue
// > -1e-8). Throws ConfigError on violation.
GaussianSource make_source(Eigen::MatrixXd cov_x, Eigen::MatrixXd cov_y,
                           Eigen::MatrixXd cov_xy);

// Random well-conditioned source with canonical correlations bounded by
// `correlation` (the largest one equals it). Deterministic in `seed`.
GaussianSource synthetic_source(int dim_x, int dim_y, std::uint64_t seed,
                                double correlation);

// Sigma_{x|y} = Sigma_x - Sigma_xy Sigma_y^-1 Sigma_xy^T. Throws
// NumericalError when cov_y has condition number above 1e12.
Eigen::MatrixXd conditional_covariance(const GaussianSource& s);

// Eigenstructure of Sigma_{x|y} Sigma_x^-1, the object the whole closed-form
// encoder is built from. Solved on the symmetric whitened matrix
// L^-1 Sigma_{x|y} L^-T (L the Cholesky factor of Sigma_x) and mapped back to
// left eigenvectors v_i = L^-T u_i, so only a self-adjoint eigensolver is
// needed. Eigenvalues are clamped to [0, 1]; anything outside
// [-1e-8, 1 + 1e-8] is an error.
struct Spectrum {
  Eigen::VectorXd eigenvalues;        // ascending, in [0, 1]
  Eigen::MatrixXd left_eigenvectors;  // row i satisfies v_i^T C = lambda_i v_i^T
  Eigen::VectorXd r;                  // r_i = v_i^T Sigma_x v_i
  std::vector<double> critical_betas; // 1/(1 - lambda_i); +inf sentinel
  int dim_min = 0;                    // min(d_x, d_y): cap on active components

  // Components with lambda < 1 - 1e-10, capped at dim_min.
  int usable_components() const;
};

Spectrum compute_spectrum(const GaussianSource& s);

// beta_i^c = 1/(1 - lambda_i); +inf when lambda_i >= 1 - 1e-10.
std::vector<double> critical_betas(const Eigen::VectorXd& eigenvalues);

// Number of active rows at trade-off beta: components whose critical beta
// lies strictly below beta (a row enters with zero amplitude exactly at its
// critical value, so the boundary component is counted as inactive).
int active_components(const Spectrum& sp, double beta);

// Operating set {beta_2^c, ..., beta_nbar^c, 10 * beta_nbar^c} over the
// usable components; a single usable component yields {10 * beta_1^c}.
// Throws DomainError when no component is informative.
std::vector<double> beta_grid(const Spectrum& sp);

// The beta-dependent encoder z = A x + xi with xi ~ N(0, I) on active rows.
struct Projection {
  double beta = 0.0;
  int n_beta = 0;
  Eigen::MatrixXd matrix_a;  // dim_min x d_x, rows beyond n_beta are zero
  Eigen::VectorXd alphas;    // per active row
};

Projection projection(const Spectrum& sp, const GaussianSource& s, double beta);

// Closed-form I(x;z) and I(z;y) in bits. Both zero for beta at or below the
// first critical value.
std::pair<double, double> mutual_informations(const Spectrum& sp, double beta);

// LMMSE decoder M = Sigma_yz Sigma_z^-1 (columns beyond n_beta zero) and the
// normalized MSE of y_hat = M z, computed in closed form from the covariances.
std::pair<Eigen::MatrixXd, double> decoder_and_nmse(const GaussianSource& s,
                                                    const Projection& p);

// Transmit size in bits for a Gaussian with covariance cov_z: differential
// entropy 1/2 log2((2 pi e)^n det cov_z) floored at n_beta bits (differential
// entropy can go negative; a transmitted representation cannot).
double entropy_bits_from_cov(const Eigen::MatrixXd& cov_z, int n_beta);

// Entropy of z = A x + xi for the given projection; 0 when inactive.
double z_entropy_bits(const GaussianSource& s, const Projection& p);

// One point of the rate-relevance-distortion frontier.
struct RatePoint {
  double beta;
  double i_xz_bits;
  double i_zy_bits;
  double nmse;          // in [0, 1]
  double entropy_bits;  // transmit size N
};

RatePoint rate_point(const GaussianSource& s, const Spectrum& sp, double beta);

}  // namespace goanet::gib
