#include "goanet/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "goanet/errors.hpp"
#include "goanet/rng.hpp"

namespace goanet::sim {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kBlockedDelayFactor = 10.0;  // penalty in units of the target
constexpr double kDivergenceFactor = 1e6;

void parallel_for(int threads, std::size_t n, const auto& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

double update_queue(double q, double value, double target, double lr) {
  if (!(lr > 0.0)) throw DomainError("queue learning rate must be positive");
  return std::max(0.0, q + lr * (value - target));
}

std::optional<std::int64_t> detect_convergence(
    const std::vector<std::vector<double>>& series, int window, double tol) {
  if (window < 100) throw DomainError("convergence window must be >= 100");
  if (series.empty()) return std::nullopt;
  const std::size_t len = series.front().size();
  for (const auto& s : series) {
    if (s.size() != len) throw DomainError("queue series lengths differ");
  }
  std::vector<std::vector<double>> prefix(series.size());
  for (std::size_t q = 0; q < series.size(); ++q) {
    prefix[q].resize(len + 1, 0.0);
    for (std::size_t i = 0; i < len; ++i) {
      prefix[q][i + 1] = prefix[q][i] + series[q][i];
    }
  }
  const auto w = static_cast<std::size_t>(window);
  for (std::size_t s = 2 * w; s <= len; ++s) {
    bool ok = true;
    for (std::size_t q = 0; q < series.size() && ok; ++q) {
      const double m1 = (prefix[q][s - w] - prefix[q][s - 2 * w]) / window;
      const double m2 = (prefix[q][s] - prefix[q][s - w]) / window;
      const double scale = std::max({std::abs(m1), std::abs(m2), 1e-300});
      ok = std::abs(m2 - m1) < tol * scale;
    }
    if (ok) return static_cast<std::int64_t>(s);
  }
  return std::nullopt;
}

Engine::Engine(Scenario scenario, int threads)
    : scenario_(std::move(scenario)), threads_(std::max(1, threads)) {
  const std::size_t k = scenario_.devices.size();
  if (k == 0) throw ConfigError("scenario needs at least one device");
  for (const auto& d : scenario_.devices) {
    if (!(d.cpu.f_max_hz > 0) || !(d.cpu.eta > 0) || !(d.cpu.rho > 0) ||
        !(d.radio.bandwidth_hz > 0) || !(d.radio.noise_psd_w_per_hz > 0) ||
        !(d.radio.max_tx_power_w > 0) || !(d.distance_m > 0)) {
      throw ConfigError("device physical quantities must be positive");
    }
    if (!(d.targets.d_avg_s > 0) || !(d.targets.g_avg > 0)) {
      throw ConfigError("device targets must be positive");
    }
    if (!(d.epsilon > 0) || !(d.nu > 0) || !(d.gamma > 0)) {
      throw ConfigError("device weights must be positive");
    }
  }
  if (scenario_.V < 0) throw ConfigError("V must be nonnegative");

  runtime_.resize(k);
  rho_es_.assign(k, 1.0);
  if (scenario_.mode == Mode::gib) {
    if (scenario_.server.rho_es.size() == 1) {
      rho_es_.assign(k, scenario_.server.rho_es.front());
    } else if (scenario_.server.rho_es.size() == k) {
      rho_es_ = scenario_.server.rho_es;
    } else {
      throw ConfigError("server.rho_es must hold one value or one per device");
    }
    for (std::size_t i = 0; i < k; ++i) {
      const auto& dev = scenario_.devices[i];
      const auto it = scenario_.sources.find(dev.source);
      if (it == scenario_.sources.end()) {
        throw ConfigError("device " + std::to_string(dev.id) +
                          " references unknown source '" + dev.source + "'");
      }
      const gib::GaussianSource& src = it->second;
      const gib::Spectrum sp = gib::compute_spectrum(src);
      const std::vector<double> grid = gib::beta_grid(sp);
      DeviceRuntime rt;
      rt.table.reserve(grid.size());
      for (const double beta : grid) {
        const gib::RatePoint pt = gib::rate_point(src, sp, beta);
        const int n_beta = gib::active_components(sp, beta);
        rt.table.push_back(slotopt::BetaPoint{
            beta, pt.entropy_bits, static_cast<double>(src.dim_x()) * n_beta,
            pt.nmse});
        rt.metric_floor = std::min(rt.metric_floor, pt.nmse);
      }
      rt.w_es = static_cast<double>(src.dim_y()) * src.dim_min();
      w_es_max_ = std::max(w_es_max_, rt.w_es);
      runtime_[i] = std::move(rt);
    }
  } else {
    const auto& p = scenario_.surrogate.params;
    if (!(p.a > 0) || !(p.b > 0) || !(p.c > 0)) {
      throw ConfigError("surrogate parameters must be positive");
    }
    for (std::size_t i = 0; i < k; ++i) {
      runtime_[i].metric_floor =
          surrogate::g_approx(1.0, 1.0, p, scenario_.surrogate.m_min);
    }
  }

  queue_t_.assign(k, 0.0);
  queue_u_.assign(k, 0.0);
  queue_prefix_.assign(2 * k, std::vector<double>{0.0});
}

double Engine::metric_floor(std::size_t device) const {
  return runtime_.at(device).metric_floor;
}

DeviceSlot Engine::realize(std::size_t i, const channel::ChannelDraw& draw,
                           const slotopt::EdDecisionGib* gib_dec,
                           const slotopt::EdDecisionSqgan* sq_dec, double f_es,
                           double es_power_share) {
  const DeviceConfig& dev = scenario_.devices[i];
  const bool is_gib = scenario_.mode == Mode::gib;

  DeviceSlot out;
  out.gain = draw.gain;
  out.f_es_hz = f_es;
  out.p_es_w = es_power_share;

  double bits = 0.0, ops = 0.0, metric = 1.0;
  if (is_gib) {
    const auto& table = runtime_[i].table;
    const auto it = std::find_if(
        table.begin(), table.end(),
        [&](const slotopt::BetaPoint& pt) { return pt.beta == gib_dec->beta; });
    bits = it->bits;
    ops = it->ops;
    metric = it->nmse;
    out.beta_or_ms = gib_dec->beta;
    out.rate_bps = gib_dec->rate_bps;
    out.freq_hz = gib_dec->freq_hz;
  } else {
    bits = surrogate::bits_count(sq_dec->m_x, sq_dec->m_s);
    ops = surrogate::ops_count(sq_dec->m_x, sq_dec->m_s);
    metric = surrogate::g_approx(sq_dec->m_x, sq_dec->m_s,
                                 scenario_.surrogate.params,
                                 scenario_.surrogate.m_min);
    out.beta_or_ms = sq_dec->m_s;
    out.m_x = sq_dec->m_x;
    out.rate_bps = sq_dec->rate_bps;
    out.freq_hz = sq_dec->freq_hz;
  }

  out.blocked = draw.gain <= 0.0 || (bits > 0.0 && out.rate_bps <= 0.0) ||
                (ops > 0.0 && out.freq_hz <= 0.0) ||
                (is_gib && runtime_[i].w_es > 0.0 && f_es <= 0.0);

  if (!out.blocked) {
    out.d_proc_s = ops > 0.0 ? ops / (out.freq_hz * dev.cpu.rho) : 0.0;
    out.d_tr_s = bits > 0.0 ? bits / out.rate_bps : 0.0;
    out.d_es_s =
        is_gib && runtime_[i].w_es > 0.0 ? runtime_[i].w_es / (f_es * rho_es_[i]) : 0.0;
    out.delay_s = out.d_proc_s + out.d_tr_s + out.d_es_s;
    out.metric = metric;
    if (!is_gib && scenario_.surrogate.metric_noise_std > 0.0) {
      rng::Stream noise(scenario_.seed, static_cast<std::uint64_t>(dev.id),
                        static_cast<std::uint64_t>(t_), 0x6d657472u /* "metr" */);
      out.metric = std::max(
          0.0, out.metric + scenario_.surrogate.metric_noise_std * noise.next_normal());
    }
  } else {
    // Nothing usable reaches the server this slot: charge the delay queue a
    // fixed penalty and the metric queue the worst on-domain value.
    out.delay_s = kBlockedDelayFactor * dev.targets.d_avg_s;
    out.metric = is_gib ? 1.0
                        : surrogate::g_approx(scenario_.surrogate.m_min,
                                              scenario_.surrogate.m_min,
                                              scenario_.surrogate.params,
                                              scenario_.surrogate.m_min);
  }

  out.p_cpu_w = dev.cpu.eta * out.freq_hz * out.freq_hz * out.freq_hz;
  if (draw.gain > 0.0 && out.rate_bps > 0.0) {
    out.p_tr_w = dev.radio.bandwidth_hz * dev.radio.noise_psd_w_per_hz /
                 draw.gain *
                 (std::exp(out.rate_bps * kLn2 / dev.radio.bandwidth_hz) - 1.0);
  }

  queue_t_[i] = update_queue(queue_t_[i], out.delay_s, dev.targets.d_avg_s,
                             dev.epsilon);
  queue_u_[i] =
      update_queue(queue_u_[i], out.metric, dev.targets.g_avg, dev.nu);
  out.queue_t = queue_t_[i];
  out.queue_u = queue_u_[i];
  return out;
}

SlotRecord Engine::step() {
  const std::size_t k = scenario_.devices.size();
  std::vector<channel::ChannelDraw> draws(k);
  std::vector<slotopt::EdDecisionGib> gib_dec(k);
  std::vector<slotopt::EdDecisionSqgan> sq_dec(k);
  const bool is_gib = scenario_.mode == Mode::gib;

  parallel_for(threads_, k, [&](std::size_t i) {
    const DeviceConfig& dev = scenario_.devices[i];
    draws[i] = channel::sample_gain(
        scenario_.seed, static_cast<std::uint64_t>(dev.id), t_, dev.distance_m,
        scenario_.channel_params, scenario_.fading, dev.radio);
    if (is_gib) {
      slotopt::EdGibProblem prob;
      prob.table = &runtime_[i].table;
      prob.queue_pressure = dev.epsilon * queue_t_[i];
      prob.metric_pressure = dev.nu * queue_u_[i];
      prob.V = scenario_.V;
      prob.gamma = dev.gamma;
      prob.eta = dev.cpu.eta;
      prob.rho = dev.cpu.rho;
      prob.gain = draws[i].gain;
      prob.r_max_bps = draws[i].r_max_bps;
      prob.f_max_hz = dev.cpu.f_max_hz;
      prob.radio = dev.radio;
      gib_dec[i] = slotopt::solve_ed_gib(prob);
    } else {
      slotopt::EdSqganProblem prob;
      prob.params = scenario_.surrogate.params;
      prob.mode = scenario_.surrogate.mode;
      prob.m_min = scenario_.surrogate.m_min;
      prob.queue_pressure = dev.epsilon * queue_t_[i];
      prob.metric_pressure = dev.nu * queue_u_[i];
      prob.V = scenario_.V;
      prob.eta = dev.cpu.eta;
      prob.rho = dev.cpu.rho;
      prob.gain = draws[i].gain;
      prob.r_max_bps = draws[i].r_max_bps;
      prob.f_max_hz = dev.cpu.f_max_hz;
      prob.radio = dev.radio;
      sq_dec[i] = slotopt::solve_ed_sqgan(prob);
    }
  });

  SlotRecord rec;
  rec.t = t_;
  slotopt::EsDecision es;
  es.f_es_hz.assign(k, 0.0);
  double es_power = 0.0;
  double f_es_sum = 0.0;
  if (is_gib) {
    std::vector<double> pressures(k);
    for (std::size_t i = 0; i < k; ++i) {
      pressures[i] = scenario_.devices[i].epsilon * queue_t_[i];
    }
    es = slotopt::solve_es(pressures, w_es_max_, rho_es_, scenario_.V,
                           scenario_.server.eta, scenario_.server.f_c_max_hz);
    rec.f_c_hz = es.f_c_hz;
    es_power = scenario_.server.eta * es.f_c_hz * es.f_c_hz * es.f_c_hz;
    for (const double f : es.f_es_hz) f_es_sum += f;
  }

  rec.devices.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double share =
        f_es_sum > 0.0 ? es_power * es.f_es_hz[i] / f_es_sum : 0.0;
    rec.devices.push_back(realize(i, draws[i],
                                  is_gib ? &gib_dec[i] : nullptr,
                                  is_gib ? nullptr : &sq_dec[i],
                                  es.f_es_hz[i], share));
  }

  for (std::size_t i = 0; i < k; ++i) {
    queue_prefix_[2 * i].push_back(queue_prefix_[2 * i].back() + queue_t_[i]);
    queue_prefix_[2 * i + 1].push_back(queue_prefix_[2 * i + 1].back() +
               queue_u_[i]);
    const DeviceConfig& dev = scenario_.devices[i];
    if (queue_t_[i] >
            kDivergenceFactor * dev.epsilon * dev.targets.d_avg_s ||
        queue_u_[i] > kDivergenceFactor * dev.nu * dev.targets.g_avg) {
      diverged_ = true;
    }
  }
  ++t_;
  return rec;
}

Engine::RunResult Engine::run() {
  RunResult result;
  result.trace.reserve(static_cast<std::size_t>(
      std::min<std::int64_t>(scenario_.max_slots, 65536)));
  const auto w = static_cast<std::size_t>(scenario_.convergence.window);
  const double tol = scenario_.convergence.tol;
  std::int64_t converged_at = -1;

  while (t_ < scenario_.max_slots) {
    result.trace.push_back(step());
    if (diverged_) break;
    const auto s = static_cast<std::size_t>(t_);
    if (s >= 2 * w) {
      bool ok = true;
      for (const auto& prefix : queue_prefix_) {
        const double m1 =
            (prefix[s - w] - prefix[s - 2 * w]) / static_cast<double>(w);
        const double m2 = (prefix[s] - prefix[s - w]) / static_cast<double>(w);
        const double scale = std::max({std::abs(m1), std::abs(m2), 1e-300});
        if (std::abs(m2 - m1) >= tol * scale) {
          ok = false;
          break;
        }
      }
      if (ok) {
        converged_at = t_;
        break;
      }
    }
  }

  if (converged_at >= 0 && !diverged_) {
    for (int i = 0; i < scenario_.summary_window && !diverged_; ++i) {
      result.trace.push_back(step());
    }
  }

  RunSummary& summary = result.summary;
  summary.convergence_slot = converged_at;
  const std::size_t k = scenario_.devices.size();
  summary.d_avg_s.assign(k, 0.0);
  summary.g_avg.assign(k, 0.0);

  std::size_t win_begin = 0;
  std::size_t win_len = 0;
  const bool completed =
      converged_at >= 0 && !diverged_ &&
      result.trace.size() >= static_cast<std::size_t>(converged_at) +
                                 static_cast<std::size_t>(scenario_.summary_window);
  if (completed) {
    win_begin = static_cast<std::size_t>(converged_at);
    win_len = static_cast<std::size_t>(scenario_.summary_window);
  } else if (!result.trace.empty()) {
    win_len = std::min<std::size_t>(
        result.trace.size(), static_cast<std::size_t>(scenario_.summary_window));
    win_begin = result.trace.size() - win_len;
  }
  summary.window = static_cast<int>(win_len);
  summary.feasible = completed;

  if (win_len > 0) {
    double p_ed = 0.0, p_es = 0.0;
    for (std::size_t s = win_begin; s < win_begin + win_len; ++s) {
      const SlotRecord& rec = result.trace[s];
      for (std::size_t i = 0; i < k; ++i) {
        const DeviceSlot& d = rec.devices[i];
        p_ed += d.p_cpu_w + d.p_tr_w;
        p_es += d.p_es_w;
        summary.d_avg_s[i] += d.delay_s;
        summary.g_avg[i] += d.metric;
      }
    }
    const auto n = static_cast<double>(win_len);
    summary.p_ed_w = p_ed / n;
    summary.p_es_w = p_es / n;
    summary.p_total_w = summary.p_ed_w + summary.p_es_w;
    for (std::size_t i = 0; i < k; ++i) {
      summary.d_avg_s[i] /= n;
      summary.g_avg[i] /= n;
    }
  }
  return result;
}

Scenario apply_point(Scenario base, const SweepPoint& point) {
  for (auto& dev : base.devices) {
    if (point.d_avg_s) dev.targets.d_avg_s = *point.d_avg_s;
    if (point.g_avg) dev.targets.g_avg = *point.g_avg;
    if (point.gamma) dev.gamma = *point.gamma;
  }
  if (point.V) base.V = *point.V;
  return base;
}

std::vector<SweepRow> run_sweep(const Scenario& base,
                                const std::vector<SweepPoint>& grid,
                                int threads) {
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const SweepPoint& point : grid) {
    SweepRow row;
    row.point = point;
    try {
      Engine engine(apply_point(base, point), threads);
      row.summary = engine.run().summary;
      row.status = row.summary.feasible ? "ok" : "infeasible";
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace goanet::sim
