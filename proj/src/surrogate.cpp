#include "goanet/surrogate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "goanet/errors.hpp"

namespace goanet::surrogate {

MaskPair make_mask_pair(double m_x, double m_s, double m_min) {
  if (m_x < m_min || m_x > 1.0 || m_s < m_min || m_s > 1.0) {
    throw DomainError("masking fractions must lie in [m_min, 1]");
  }
  return MaskPair{m_x, m_s};
}

double ops_count(double m_x, double m_s) {
  return kVqOpsAtFullMasks * (m_x + m_s);
}

double bits_count(double m_x, double m_s) {
  return kLatentVectors * (kIndexBits * (m_x + m_s) + 2.0);
}

double bits_per_pixel(double m_x, double m_s) {
  return (kIndexBits * (m_x + m_s) + 2.0) / 256.0;
}

double g_approx(double m_x, double m_s, const Params& p, double m_min) {
  if (m_x < m_min || m_s < m_min) {
    throw DomainError("mask below the domain floor m_min");
  }
  return p.a / std::pow(m_x, p.b) + p.c / m_s;
}

double m_x_reduction(double m_s, const Params& p, ReductionMode mode,
                     double m_min) {
  if (m_s < m_min || m_s > 1.0) {
    throw DomainError("m_s must lie in [m_min, 1]");
  }
  // Work in logs: the unclipped value overflows a double for small b.
  double log_mx;
  if (mode == ReductionMode::paper) {
    log_mx = std::log(p.a / p.c) / p.b + 2.0 / p.b * std::log(m_s);
  } else {
    log_mx = (std::log(p.a * p.b / p.c) + 2.0 * std::log(m_s)) / (1.0 + p.b);
  }
  if (log_mx >= 0.0) return 1.0;
  return std::clamp(std::exp(log_mx), m_min, 1.0);
}

Params fit(const std::vector<FitSample>& samples) {
  if (samples.size() < 6) {
    throw FitError("surrogate fit needs at least 6 samples");
  }
  std::set<double> xs, ss;
  for (const auto& s : samples) {
    if (s.m_x <= 0.0 || s.m_s <= 0.0) {
      throw FitError("surrogate fit samples need positive masks");
    }
    xs.insert(s.m_x);
    ss.insert(s.m_s);
  }
  if (xs.size() < 2 || ss.size() < 2) {
    throw FitError("surrogate fit samples must span both mask axes");
  }

  const auto n = static_cast<Eigen::Index>(samples.size());

  // Seed c by regressing G on 1/m_s over the largest-m_x samples, where the
  // a/m_x^b term is flattest.
  const double x_top = *xs.rbegin();
  double sum_u = 0, sum_g = 0, sum_uu = 0, sum_ug = 0;
  int top_count = 0;
  for (const auto& s : samples) {
    if (s.m_x < 0.99 * x_top) continue;
    const double u = 1.0 / s.m_s;
    sum_u += u;
    sum_g += s.distortion;
    sum_uu += u * u;
    sum_ug += u * s.distortion;
    ++top_count;
  }
  double c0 = 1e-3;
  if (top_count >= 2) {
    const double denom = top_count * sum_uu - sum_u * sum_u;
    if (std::abs(denom) > 1e-30) {
      c0 = (top_count * sum_ug - sum_u * sum_g) / denom;
    }
  }
  c0 = std::max(c0, 1e-9);

  // Log-space regression of the residual against m_x seeds (a, b):
  // log(G - c/m_s) ~ log a - b log m_x.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& s : samples) {
    const double resid = s.distortion - c0 / s.m_s;
    if (resid <= 0.0) continue;
    const double lx = std::log(s.m_x);
    const double ly = std::log(resid);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  double a0 = 0.25, b0 = 0.1;
  if (m >= 2) {
    const double denom = m * sxx - sx * sx;
    if (std::abs(denom) > 1e-30) {
      b0 = -(m * sxy - sx * sy) / denom;
      a0 = std::exp((sy - (-b0) * sx) / m);
    }
  }
  a0 = std::max(a0, 1e-9);
  b0 = std::clamp(b0, 1e-6, 10.0);

  // Damped Gauss-Newton on e_i = a/m_x^b + c/m_s - G_i.
  Eigen::Vector3d theta(a0, b0, c0);
  auto sse = [&](const Eigen::Vector3d& t) {
    double acc = 0.0;
    for (const auto& s : samples) {
      const double e =
          t(0) / std::pow(s.m_x, t(1)) + t(2) / s.m_s - s.distortion;
      acc += e * e;
    }
    return acc;
  };
  double best = sse(theta);
  double damping = 1e-3;
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::MatrixXd jac(n, 3);
    Eigen::VectorXd err(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& s = samples[static_cast<std::size_t>(i)];
      const double pw = std::pow(s.m_x, -theta(1));
      err(i) = theta(0) * pw + theta(2) / s.m_s - s.distortion;
      jac(i, 0) = pw;
      jac(i, 1) = -theta(0) * std::log(s.m_x) * pw;
      jac(i, 2) = 1.0 / s.m_s;
    }
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    const Eigen::Vector3d jte = jac.transpose() * err;
    bool accepted = false;
    for (int attempt = 0; attempt < 25; ++attempt) {
      const Eigen::Vector3d step =
          (jtj + damping * Eigen::Matrix3d::Identity()).ldlt().solve(-jte);
      Eigen::Vector3d cand = theta + step;
      cand(0) = std::max(cand(0), 1e-12);
      cand(1) = std::max(cand(1), 1e-12);
      cand(2) = std::max(cand(2), 1e-12);
      const double cand_sse = sse(cand);
      if (cand_sse <= best) {
        const bool tiny_step = step.norm() <= 1e-14 * (1.0 + theta.norm());
        theta = cand;
        best = cand_sse;
        damping = std::max(damping / 3.0, 1e-12);
        accepted = true;
        if (tiny_step) iter = 200;
        break;
      }
      damping *= 10.0;
    }
    if (!accepted) break;
  }

  if (theta(1) < 1e-6) {
    throw FitError("degenerate fit: distortion surface is flat in m_x");
  }
  Params out;
  out.a = theta(0);
  out.b = theta(1);
  out.c = theta(2);
  out.fit_residual = best / static_cast<double>(n);
  return out;
}

}  // namespace goanet::surrogate
