#pragma once

#include <vector>

#include "goanet/channel.hpp"
#include "goanet/surrogate.hpp"

namespace goanet::slotopt {

// Principal branch of the Lambert W function on x >= 0, solved by Halley
// iteration from the initial guess ln(1 + x). Residual |W e^W - x| stays
// within 1e-12 * max(1, x). Throws DomainError for x < 0.
double lambert_w0(double x);

// Drift-plus-penalty tunables. V weights power against queue drift; epsilon
// and nu are the delay/metric queue learning rates; gamma weights the device
// CPU power inside the objective (used in the projection-encoder mode only).
struct LyapunovWeights {
  double V = 1.0;
  double epsilon = 1.0;
  double nu = 1.0;
  double gamma = 1.0;
};

// One precomputed operating point of a device's beta grid: transmit bits,
// encoder operations and the reconstruction NMSE at that beta.
struct BetaPoint {
  double beta = 0.0;
  double bits = 0.0;
  double ops = 0.0;
  double nmse = 1.0;
};

struct EdDecisionGib {
  double beta = 0.0;
  double rate_bps = 0.0;
  double freq_hz = 0.0;
  double objective = 0.0;
};

struct EdDecisionSqgan {
  double m_x = 0.0;
  double m_s = 0.0;
  double rate_bps = 0.0;
  double freq_hz = 0.0;
  double objective = 0.0;
};

struct EsDecision {
  double f_c_hz = 0.0;
  std::vector<double> f_es_hz;
};

// Closed-form optimal transmission rate
//   R* = (2B / ln 2) W(sqrt(eT ln2 h N / (4 B^2 V N0)))
// clipped to [0, r_max]. eT is the delay-queue pressure epsilon_k T_k(t);
// returns 0 when there is nothing to transmit.
double optimal_rate(double queue_pressure, double n_bits, double gain,
                    const channel::RadioConfig& radio, double V,
                    double r_max_bps);

// Closed-form optimal CPU frequency f* = (eT W / (3 V Gamma eta rho))^(1/4)
// clipped to [0, f_max]; 0 when there is no work.
double optimal_freq(double queue_pressure, double w_ops, double V,
                    double gamma, double eta, double rho, double f_max_hz);

// Per-slot device objective: queue-weighted delays, metric pressure and
// V-weighted power (the transmit exponential keeps its constant term, which
// does not move the argmin). Returns +inf when pending work cannot be served
// (zero gain, or zero rate/frequency with bits/ops outstanding).
double ed_objective(double queue_pressure, double bits, double ops,
                    double metric_pressure, double metric, double V,
                    double gamma, double eta, double rho, double gain,
                    const channel::RadioConfig& radio, double rate_bps,
                    double freq_hz);

struct EdGibProblem {
  const std::vector<BetaPoint>* table = nullptr;
  double queue_pressure = 0.0;   // epsilon_k T_k
  double metric_pressure = 0.0;  // nu_k U_k
  double V = 1.0;
  double gamma = 1.0;
  double eta = 1e-27;
  double rho = 1.0;
  double gain = 0.0;
  double r_max_bps = 0.0;
  double f_max_hz = 0.0;
  channel::RadioConfig radio;
};

// Evaluates the closed forms at every grid beta and returns the argmin;
// ties break toward the smaller beta. An unusable channel (gain <= 0) yields
// the idle decision with an infinite objective. Throws DomainError on an
// empty grid.
EdDecisionGib solve_ed_gib(const EdGibProblem& p);

// Water-filling-style split of the server CPU across devices:
//   f_c* = sqrt(sum_k sqrt(A_k)) / (3 V eta)^(1/4),  A_k = eT_k W / rho_k
//   f_k  = sqrt(A_k) / S * f_c
// clipped to f_c_max with the proportional split preserved. All-zero queue
// pressures yield the all-zero allocation.
EsDecision solve_es(const std::vector<double>& queue_pressures,
                    double w_es_max, const std::vector<double>& rho_es,
                    double V, double eta, double f_c_max_hz);

struct EdSqganProblem {
  surrogate::Params params;
  surrogate::ReductionMode mode = surrogate::ReductionMode::stationary;
  double m_min = surrogate::kDefaultMaskFloor;
  double queue_pressure = 0.0;
  double metric_pressure = 0.0;
  double V = 1.0;
  double eta = 1e-26;
  double rho = 1.0;
  double gain = 0.0;
  double r_max_bps = 0.0;
  double f_max_hz = 0.0;
  channel::RadioConfig radio;
};

// Reduces the mask pair to a single variable through m_x_reduction, plugs in
// the closed-form rate and frequency, and minimizes over m_s with a 64-point
// log-spaced scan refined by golden-section search to |dm_s| <= 1e-6.
EdDecisionSqgan solve_ed_sqgan(const EdSqganProblem& p);

}  // namespace goanet::slotopt
