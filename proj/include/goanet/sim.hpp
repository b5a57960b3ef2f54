#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "goanet/channel.hpp"
#include "goanet/gib.hpp"
#include "goanet/slotopt.hpp"
#include "goanet/surrogate.hpp"

namespace goanet::sim {

enum class Mode { gib, sqgan };

struct CpuConfig {
  double f_max_hz = 1.8e9;
  double eta = 2.57e-27;     // effective switch capacitance: P = eta f^3
  double rho = 4.0;          // cores x floating-point ops per cycle
  double p_cpu_max_w = 0.0;  // informational
};

struct Targets {
  double d_avg_s = 0.0;  // long-term average delay bound
  double g_avg = 0.0;    // long-term average metric bound
};

struct DeviceConfig {
  int id = 0;
  double distance_m = 1.0;
  CpuConfig cpu;
  channel::RadioConfig radio;
  Targets targets;
  double epsilon = 1.0;  // delay-queue learning rate
  double nu = 1.0;       // metric-queue learning rate
  double gamma = 1.0;    // CPU-power weight in the objective (gib mode)
  std::string source;    // gib source name
};

struct ServerConfig {
  double f_c_max_hz = 1.8e9;
  double eta = 2.57e-27;
  std::vector<double> rho_es;  // per device
};

struct ConvergenceConfig {
  int window = 500;
  double tol = 1e-3;
};

struct SurrogateConfig {
  surrogate::Params params;
  surrogate::ReductionMode mode = surrogate::ReductionMode::stationary;
  double m_min = surrogate::kDefaultMaskFloor;
  // Optional Gaussian noise on the realized metric, emulating the gap
  // between the fitted surrogate and the measured distortion.
  double metric_noise_std = 0.0;
};

struct Scenario {
  Mode mode = Mode::gib;
  std::uint64_t seed = 0;
  std::int64_t max_slots = 200000;
  int summary_window = 1000;
  ConvergenceConfig convergence;
  double V = 1.0;
  channel::AbgParams channel_params;
  channel::Fading fading = channel::Fading::rayleigh;
  ServerConfig server;
  SurrogateConfig surrogate;
  std::vector<DeviceConfig> devices;
  std::map<std::string, gib::GaussianSource> sources;
};

// Virtual-queue update q' = max(0, q + lr (value - target)).
double update_queue(double q, double value, double target, double lr);

// Per-device slot outcome.
struct DeviceSlot {
  double beta_or_ms = 0.0;  // chosen beta (gib) or m_s (sqgan)
  double m_x = 0.0;         // sqgan only
  double rate_bps = 0.0;
  double freq_hz = 0.0;
  double f_es_hz = 0.0;     // gib only
  double gain = 0.0;
  double d_proc_s = 0.0;    // encoder / vector-quantization delay
  double d_tr_s = 0.0;
  double d_es_s = 0.0;      // gib only
  double delay_s = 0.0;     // realized total (penalty value when blocked)
  double metric = 1.0;
  double p_cpu_w = 0.0;
  double p_tr_w = 0.0;
  double p_es_w = 0.0;      // share of the server power
  double queue_t = 0.0;     // after update
  double queue_u = 0.0;     // after update
  bool blocked = false;
};

struct SlotRecord {
  std::int64_t t = 0;
  double f_c_hz = 0.0;
  std::vector<DeviceSlot> devices;
};

struct RunSummary {
  std::int64_t convergence_slot = -1;  // -1 when never detected
  int window = 0;
  double p_total_w = 0.0;
  double p_ed_w = 0.0;
  double p_es_w = 0.0;
  std::vector<double> d_avg_s;  // per device, over the post-convergence window
  std::vector<double> g_avg;    // per device
  bool feasible = false;
};

// Earliest index s (number of completed slots) at which every series' mean
// over [s-2w, s-w) differs from its mean over [s-w, s) by less than tol
// relative. Constant series converge at the first admissible index 2w.
std::optional<std::int64_t> detect_convergence(
    const std::vector<std::vector<double>>& series, int window, double tol);

// Slot-based drift-plus-penalty engine. Per-slot device solves are pure and
// may run on several threads; results are identical to sequential execution
// and records are ordered by (t, device).
class Engine {
 public:
  explicit Engine(Scenario scenario, int threads = 1);

  const Scenario& scenario() const { return scenario_; }
  std::int64_t slot() const { return t_; }
  const std::vector<double>& queue_t() const { return queue_t_; }
  const std::vector<double>& queue_u() const { return queue_u_; }
  // Metric floor of a device's task (best reachable value).
  double metric_floor(std::size_t device) const;

  SlotRecord step();

  struct RunResult {
    std::vector<SlotRecord> trace;
    RunSummary summary;
  };

  // Runs until the virtual queues converge, then for a further
  // summary_window slots over which the averages are taken. A run is
  // infeasible when a queue crosses the divergence threshold or the slot cap
  // is reached without convergence; the partial trace is retained.
  RunResult run();

 private:
  struct DeviceRuntime {
    std::vector<slotopt::BetaPoint> table;  // gib mode
    double w_es = 0.0;                      // d_y * d_min (gib mode)
    double metric_floor = 1.0;
  };

  DeviceSlot realize(std::size_t i, const channel::ChannelDraw& draw,
                     const slotopt::EdDecisionGib* gib_dec,
                     const slotopt::EdDecisionSqgan* sq_dec, double f_es,
                     double es_power_share);

  Scenario scenario_;
  int threads_ = 1;
  std::int64_t t_ = 0;
  std::vector<DeviceRuntime> runtime_;
  double w_es_max_ = 0.0;
  std::vector<double> rho_es_;
  std::vector<double> queue_t_;
  std::vector<double> queue_u_;
  // Prefix sums of every queue series for O(1) window means.
  std::vector<std::vector<double>> queue_prefix_;
  bool diverged_ = false;
};

// One sweep coordinate; unset fields keep the base scenario's value. Set
// fields override every device (d_avg, g_avg, gamma) or the global V.
struct SweepPoint {
  std::optional<double> d_avg_s;
  std::optional<double> g_avg;
  std::optional<double> gamma;
  std::optional<double> V;
};

Scenario apply_point(Scenario base, const SweepPoint& point);

struct SweepRow {
  SweepPoint point;
  std::string status;  // "ok", "infeasible" or "error: ..."
  RunSummary summary;
};

// One full run per grid point; per-point failures are recorded in the status
// column and the sweep continues.
std::vector<SweepRow> run_sweep(const Scenario& base,
                                const std::vector<SweepPoint>& grid,
                                int threads);

}  // namespace goanet::sim
