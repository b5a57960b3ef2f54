#include "goanet/slotopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "goanet/errors.hpp"

namespace goanet::slotopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.6931471805599453;

}  // namespace

double lambert_w0(double x) {
  if (x < 0.0) {
    throw DomainError("lambert_w0 requires x >= 0 on the principal branch");
  }
  if (x == 0.0) return 0.0;
  double w = std::log1p(x);
  for (int iter = 0; iter < 64; ++iter) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    if (std::abs(f) <= 0.25e-12 * std::max(1.0, x)) break;
    const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
    const double step = f / denom;
    w -= step;
    if (std::abs(step) <= 1e-17 * std::abs(w)) break;
  }
  return w;
}

double optimal_rate(double queue_pressure, double n_bits, double gain,
                    const channel::RadioConfig& radio, double V,
                    double r_max_bps) {
  if (queue_pressure <= 0.0 || n_bits <= 0.0 || gain <= 0.0) return 0.0;
  const double b = radio.bandwidth_hz;
  const double arg = std::sqrt(queue_pressure * kLn2 * gain * n_bits /
                               (4.0 * b * b * V * radio.noise_psd_w_per_hz));
  const double rate = 2.0 * b / kLn2 * lambert_w0(arg);
  return std::clamp(rate, 0.0, r_max_bps);
}

double optimal_freq(double queue_pressure, double w_ops, double V,
                    double gamma, double eta, double rho, double f_max_hz) {
  if (queue_pressure <= 0.0 || w_ops <= 0.0) return 0.0;
  const double freq =
      std::pow(queue_pressure * w_ops / (3.0 * V * gamma * eta * rho), 0.25);
  return std::clamp(freq, 0.0, f_max_hz);
}

double ed_objective(double queue_pressure, double bits, double ops,
                    double metric_pressure, double metric, double V,
                    double gamma, double eta, double rho, double gain,
                    const channel::RadioConfig& radio, double rate_bps,
                    double freq_hz) {
  if (gain <= 0.0) return kInf;
  double obj = metric_pressure * metric;
  if (queue_pressure > 0.0 && bits > 0.0) {
    if (rate_bps <= 0.0) return kInf;
    obj += queue_pressure * bits / rate_bps;
  }
  if (queue_pressure > 0.0 && ops > 0.0) {
    if (freq_hz <= 0.0) return kInf;
    obj += queue_pressure * ops / (freq_hz * rho);
  }
  obj += V * radio.bandwidth_hz * radio.noise_psd_w_per_hz / gain *
         std::exp(rate_bps * kLn2 / radio.bandwidth_hz);
  obj += V * gamma * eta * freq_hz * freq_hz * freq_hz;
  return obj;
}

EdDecisionGib solve_ed_gib(const EdGibProblem& p) {
  if (p.table == nullptr || p.table->empty()) {
    throw DomainError("device beta grid is empty");
  }
  if (p.gain <= 0.0) {
    return EdDecisionGib{p.table->front().beta, 0.0, 0.0, kInf};
  }
  EdDecisionGib best;
  best.objective = kInf;
  for (const BetaPoint& pt : *p.table) {
    const double rate = optimal_rate(p.queue_pressure, pt.bits, p.gain,
                                     p.radio, p.V, p.r_max_bps);
    const double freq = optimal_freq(p.queue_pressure, pt.ops, p.V, p.gamma,
                                     p.eta, p.rho, p.f_max_hz);
    const double obj = ed_objective(p.queue_pressure, pt.bits, pt.ops,
                                    p.metric_pressure, pt.nmse, p.V, p.gamma,
                                    p.eta, p.rho, p.gain, p.radio, rate, freq);
    if (obj < best.objective) {
      best = EdDecisionGib{pt.beta, rate, freq, obj};
    }
  }
  if (!(best.objective < kInf)) {
    // Every grid point is unservable this slot; report the cheapest beta idle.
    best = EdDecisionGib{p.table->front().beta, 0.0, 0.0, kInf};
  }
  return best;
}

EsDecision solve_es(const std::vector<double>& queue_pressures,
                    double w_es_max, const std::vector<double>& rho_es,
                    double V, double eta, double f_c_max_hz) {
  if (queue_pressures.empty() || rho_es.size() != queue_pressures.size()) {
    throw DomainError("server split needs one queue pressure and rho per device");
  }
  const std::size_t k = queue_pressures.size();
  std::vector<double> sqrt_a(k);
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double a = queue_pressures[i] * w_es_max / rho_es[i];
    sqrt_a[i] = std::sqrt(std::max(0.0, a));
    s += sqrt_a[i];
  }
  EsDecision out;
  out.f_es_hz.assign(k, 0.0);
  if (s <= 0.0) return out;
  const double f_c_unclipped = std::sqrt(s) / std::pow(3.0 * V * eta, 0.25);
  out.f_c_hz = std::min(f_c_unclipped, f_c_max_hz);
  for (std::size_t i = 0; i < k; ++i) {
    out.f_es_hz[i] = sqrt_a[i] / s * out.f_c_hz;
  }
  return out;
}

namespace {

EdDecisionSqgan eval_sqgan(const EdSqganProblem& p, double m_s) {
  const double m_x = surrogate::m_x_reduction(m_s, p.params, p.mode, p.m_min);
  const double bits = surrogate::bits_count(m_x, m_s);
  const double ops = surrogate::ops_count(m_x, m_s);
  const double rate =
      optimal_rate(p.queue_pressure, bits, p.gain, p.radio, p.V, p.r_max_bps);
  const double freq =
      optimal_freq(p.queue_pressure, ops, p.V, 1.0, p.eta, p.rho, p.f_max_hz);
  const double metric = surrogate::g_approx(m_x, m_s, p.params, p.m_min);
  const double obj =
      ed_objective(p.queue_pressure, bits, ops, p.metric_pressure, metric, p.V,
                   1.0, p.eta, p.rho, p.gain, p.radio, rate, freq);
  return EdDecisionSqgan{m_x, m_s, rate, freq, obj};
}

}  // namespace

EdDecisionSqgan solve_ed_sqgan(const EdSqganProblem& p) {
  if (p.gain <= 0.0) {
    return EdDecisionSqgan{p.m_min, p.m_min, 0.0, 0.0, kInf};
  }
  constexpr int kScanPoints = 64;
  const double log_lo = std::log(p.m_min);
  const double log_hi = 0.0;  // log(1)
  std::vector<double> grid(kScanPoints);
  std::vector<double> value(kScanPoints);
  EdDecisionSqgan best;
  best.objective = kInf;
  for (int i = 0; i < kScanPoints; ++i) {
    const double t = static_cast<double>(i) / (kScanPoints - 1);
    grid[static_cast<std::size_t>(i)] =
        i == 0 ? p.m_min
               : (i == kScanPoints - 1
                      ? 1.0
                      : std::exp(log_lo + t * (log_hi - log_lo)));
    const EdDecisionSqgan d = eval_sqgan(p, grid[static_cast<std::size_t>(i)]);
    value[static_cast<std::size_t>(i)] = d.objective;
    if (d.objective < best.objective) best = d;
  }

  // Golden-section refinement around every local minimum of the scan.
  constexpr double kGolden = 0.6180339887498949;
  for (int i = 0; i < kScanPoints; ++i) {
    const bool left_ok = i == 0 || value[i - 1] >= value[i];
    const bool right_ok = i == kScanPoints - 1 || value[i + 1] >= value[i];
    if (!left_ok || !right_ok) continue;
    double lo = grid[static_cast<std::size_t>(std::max(0, i - 1))];
    double hi = grid[static_cast<std::size_t>(std::min(kScanPoints - 1, i + 1))];
    double x1 = hi - kGolden * (hi - lo);
    double x2 = lo + kGolden * (hi - lo);
    EdDecisionSqgan d1 = eval_sqgan(p, x1);
    EdDecisionSqgan d2 = eval_sqgan(p, x2);
    while (hi - lo > 1e-6) {
      if (d1.objective <= d2.objective) {
        hi = x2;
        x2 = x1;
        d2 = d1;
        x1 = hi - kGolden * (hi - lo);
        d1 = eval_sqgan(p, x1);
      } else {
        lo = x1;
        x1 = x2;
        d1 = d2;
        x2 = lo + kGolden * (hi - lo);
        d2 = eval_sqgan(p, x2);
      }
    }
    const EdDecisionSqgan& local = d1.objective <= d2.objective ? d1 : d2;
    if (local.objective < best.objective) best = local;
  }
  return best;
}

}  // namespace goanet::slotopt
