#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "goanet/errors.hpp"
#include "goanet/rng.hpp"
#include "goanet/sim.hpp"
#include "scenarios.hpp"

using namespace goanet;

namespace {

sim::Scenario base_gib_scenario(int k, bool rayleigh = true) {
  testsup::GibScenarioOptions opt;
  opt.devices = k;
  opt.rayleigh = rayleigh;
  return testsup::gib_scenario(opt);
}

sim::Scenario base_sqgan_scenario(int k, bool rayleigh = true) {
  testsup::SqganScenarioOptions opt;
  opt.devices = k;
  opt.rayleigh = rayleigh;
  return testsup::sqgan_scenario(opt);
}

}  // namespace

TEST_CASE("virtual queue update") {
  CHECK(sim::update_queue(0.0, 0.005, 0.003, 1.0) ==
        doctest::Approx(0.002).epsilon(1e-12));
  CHECK(sim::update_queue(0.0, 0.001, 0.003, 1.0) == 0.0);
  CHECK(sim::update_queue(0.7, 0.003, 0.003, 1.0) == doctest::Approx(0.7));
  CHECK_THROWS_AS(sim::update_queue(0.0, 1.0, 1.0, 0.0), DomainError);
}

TEST_CASE("cold start idles and the queues take the penalty") {
  sim::Scenario sc = base_gib_scenario(1);
  sc.fading = channel::Fading::none;
  sc.channel_params.shadow_sigma_db = 0.0;
  sim::Engine engine(sc, 1);
  const auto rec = engine.step();
  REQUIRE(rec.devices.size() == 1);
  const auto& d = rec.devices[0];
  CHECK(d.blocked);
  CHECK(d.rate_bps == 0.0);
  CHECK(d.freq_hz == 0.0);
  const auto& dev = sc.devices[0];
  CHECK(d.queue_t ==
        doctest::Approx(dev.epsilon * 9.0 * dev.targets.d_avg_s).epsilon(1e-12));
  CHECK(d.queue_u ==
        doctest::Approx(dev.nu * (1.0 - dev.targets.g_avg)).epsilon(1e-12));
  // Queues keep growing until the targets start to bind.
  auto rec2 = engine.step();
  CHECK(rec2.devices[0].queue_t >= d.queue_t);
}

TEST_CASE("parallel device evaluation is bit-identical to sequential") {
  const sim::Scenario sc = base_gib_scenario(5);
  sim::Engine seq(sc, 1);
  sim::Engine par(sc, 4);
  for (int t = 0; t < 300; ++t) {
    const auto a = seq.step();
    const auto b = par.step();
    REQUIRE(a.devices.size() == b.devices.size());
    CHECK(a.f_c_hz == b.f_c_hz);
    for (std::size_t i = 0; i < a.devices.size(); ++i) {
      CHECK(a.devices[i].rate_bps == b.devices[i].rate_bps);
      CHECK(a.devices[i].freq_hz == b.devices[i].freq_hz);
      CHECK(a.devices[i].beta_or_ms == b.devices[i].beta_or_ms);
      CHECK(a.devices[i].delay_s == b.devices[i].delay_s);
      CHECK(a.devices[i].metric == b.devices[i].metric);
      CHECK(a.devices[i].queue_t == b.devices[i].queue_t);
      CHECK(a.devices[i].queue_u == b.devices[i].queue_u);
    }
  }
}

TEST_CASE("feasible run meets its long-term targets") {
  const sim::Scenario sc = base_gib_scenario(2, /*rayleigh=*/false);
  sim::Engine engine(sc, 1);
  const auto result = engine.run();
  REQUIRE(result.summary.feasible);
  CHECK(result.summary.convergence_slot > 0);
  CHECK(result.summary.window == sc.summary_window);
  for (std::size_t i = 0; i < sc.devices.size(); ++i) {
    CHECK(result.summary.d_avg_s[i] <= 1.02 * sc.devices[i].targets.d_avg_s);
    CHECK(result.summary.g_avg[i] <= 1.02 * sc.devices[i].targets.g_avg);
  }

  SUBCASE("queues stay nonnegative") {
    for (const auto& rec : result.trace) {
      for (const auto& d : rec.devices) {
        CHECK(d.queue_t >= 0.0);
        CHECK(d.queue_u >= 0.0);
      }
    }
  }

  SUBCASE("stability over the tail") {
    const std::size_t tail = result.trace.size() / 10;
    for (std::size_t dev = 0; dev < sc.devices.size(); ++dev) {
      std::vector<double> t_tail;
      for (std::size_t s = result.trace.size() - tail; s < result.trace.size();
           ++s) {
        t_tail.push_back(result.trace[s].devices[dev].queue_t);
      }
      std::vector<double> sorted = t_tail;
      std::sort(sorted.begin(), sorted.end());
      const double median = sorted[sorted.size() / 2];
      const double mx = sorted.back();
      if (median > 1e-12) CHECK(mx <= 2.0 * median);
    }
  }

  SUBCASE("energy accounting") {
    const auto begin = static_cast<std::size_t>(result.summary.convergence_slot);
    const auto len = static_cast<std::size_t>(result.summary.window);
    double total = 0.0;
    for (std::size_t s = begin; s < begin + len; ++s) {
      for (const auto& d : result.trace[s].devices) {
        total += d.p_cpu_w + d.p_tr_w + d.p_es_w;
      }
    }
    total /= static_cast<double>(len);
    CHECK(total == doctest::Approx(result.summary.p_total_w).epsilon(1e-12));
  }
}

TEST_CASE("unattainable metric target is flagged infeasible") {
  sim::Scenario sc = base_gib_scenario(1);
  sc.max_slots = 5000;
  sim::Engine probe(sc, 1);
  sc.devices[0].targets.g_avg = 0.5 * probe.metric_floor(0);
  sim::Engine engine(sc, 1);
  const auto result = engine.run();
  CHECK_FALSE(result.summary.feasible);
  // The metric queue climbs without bound.
  const double mid =
      result.trace[result.trace.size() / 2].devices[0].queue_u;
  const double end = result.trace.back().devices[0].queue_u;
  CHECK(end > mid);
  CHECK(end > 10.0);
}

TEST_CASE("larger V lowers the average power") {
  // Fixed learning rates across the V runs; a deterministic channel keeps
  // the comparison noise-free.
  double prev = std::numeric_limits<double>::infinity();
  for (const double v : {1e7, 1e8, 1e9}) {
    testsup::GibScenarioOptions opt;
    opt.devices = 1;
    opt.v = v;
    opt.rayleigh = false;
    opt.shadow_sigma_db = 0.0;
    opt.fixed_epsilon = 1.0;
    opt.fixed_nu = 4.0;
    sim::Engine engine(testsup::gib_scenario(opt), 1);
    const auto result = engine.run();
    REQUIRE(result.summary.feasible);
    CHECK(result.summary.p_total_w <= prev * (1 + 1e-9));
    prev = result.summary.p_total_w;
  }
}

TEST_CASE("realized drift respects the quadratic bound") {
  const sim::Scenario sc = base_gib_scenario(2);
  sim::Engine engine(sc, 1);
  const std::size_t k = sc.devices.size();
  std::vector<double> prev_t(k, 0.0), prev_u(k, 0.0);
  struct Slot {
    std::vector<double> t_before, u_before, t_after, u_after, delay, metric;
  };
  std::vector<Slot> slots;
  std::vector<double> d_max(k, 0.0), g_max(k, 0.0);
  for (int t = 0; t < 3000; ++t) {
    const auto rec = engine.step();
    Slot s;
    s.t_before = prev_t;
    s.u_before = prev_u;
    for (std::size_t i = 0; i < k; ++i) {
      s.t_after.push_back(rec.devices[i].queue_t);
      s.u_after.push_back(rec.devices[i].queue_u);
      s.delay.push_back(rec.devices[i].delay_s);
      s.metric.push_back(rec.devices[i].metric);
      d_max[i] = std::max(d_max[i], rec.devices[i].delay_s);
      g_max[i] = std::max(g_max[i], rec.devices[i].metric);
    }
    prev_t = s.t_after;
    prev_u = s.u_after;
    slots.push_back(std::move(s));
  }

  rng::Stream pick(5, 0);
  for (int n = 0; n < 500; ++n) {
    const auto& s = slots[pick.next_u64() % slots.size()];
    double drift = 0.0, bound = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      drift += 0.5 * (s.t_after[i] * s.t_after[i] -
                      s.t_before[i] * s.t_before[i]);
      drift += 0.5 * (s.u_after[i] * s.u_after[i] -
                      s.u_before[i] * s.u_before[i]);
      const auto& dev = sc.devices[i];
      const double eps = dev.epsilon, nu = dev.nu;
      bound += eps * eps * (d_max[i] - dev.targets.d_avg_s) *
                   (d_max[i] - dev.targets.d_avg_s) / 2.0 +
               eps * s.t_before[i] * (s.delay[i] - dev.targets.d_avg_s);
      bound += nu * nu * (g_max[i] - dev.targets.g_avg) *
                   (g_max[i] - dev.targets.g_avg) / 2.0 +
               nu * s.u_before[i] * (s.metric[i] - dev.targets.g_avg);
    }
    CHECK(drift <= bound + 1e-9 * std::max(1.0, std::abs(bound)));
  }
}

TEST_CASE("convergence detection") {
  SUBCASE("constant series converge at the first admissible index") {
    std::vector<std::vector<double>> series{std::vector<double>(1200, 5.0)};
    const auto idx = sim::detect_convergence(series, 100, 1e-3);
    REQUIRE(idx.has_value());
    CHECK(*idx == 200);
  }
  SUBCASE("linear growth never converges") {
    std::vector<double> ramp(5000);
    for (std::size_t i = 0; i < ramp.size(); ++i) {
      ramp[i] = static_cast<double>(i);
    }
    CHECK_FALSE(sim::detect_convergence({ramp}, 500, 1e-3).has_value());
  }
  SUBCASE("window below the minimum") {
    CHECK_THROWS_AS(
        sim::detect_convergence({std::vector<double>(300, 1.0)}, 50, 1e-3),
        DomainError);
  }
  SUBCASE("reference run is stable under a one-slot shift") {
    const sim::Scenario sc = base_gib_scenario(1);
    sim::Engine engine(sc, 1);
    std::vector<std::vector<double>> series(2);
    for (int t = 0; t < 8000; ++t) {
      const auto rec = engine.step();
      series[0].push_back(rec.devices[0].queue_t);
      series[1].push_back(rec.devices[0].queue_u);
    }
    const double tol = sc.convergence.tol;
    const auto idx = sim::detect_convergence(series, 500, tol);
    REQUIRE(idx.has_value());
    std::vector<std::vector<double>> shifted{
        {series[0].begin() + 1, series[0].end()},
        {series[1].begin() + 1, series[1].end()}};
    const auto idx2 = sim::detect_convergence(shifted, 500, tol);
    REQUIRE(idx2.has_value());
    CHECK(std::abs(*idx - (*idx2 + 1)) <= 50);
  }
}

TEST_CASE("sqgan mode runs and meets targets") {
  const sim::Scenario sc = base_sqgan_scenario(2);
  sim::Engine engine(sc, 1);
  const auto result = engine.run();
  REQUIRE(result.summary.feasible);
  for (std::size_t i = 0; i < sc.devices.size(); ++i) {
    CHECK(result.summary.d_avg_s[i] <= 1.02 * sc.devices[i].targets.d_avg_s);
    CHECK(result.summary.g_avg[i] <= 1.02 * sc.devices[i].targets.g_avg);
    CHECK(result.summary.p_es_w == 0.0);
  }
}

TEST_CASE("sqgan metric noise keeps the update unbiased") {
  sim::Scenario sc = base_sqgan_scenario(1);
  sc.surrogate.metric_noise_std = 0.02;
  sim::Engine engine(sc, 1);
  const auto result = engine.run();
  REQUIRE(result.summary.feasible);
  CHECK(result.summary.g_avg[0] <= 1.05 * sc.devices[0].targets.g_avg);
}

TEST_CASE("sweep points override every device and the global weight") {
  const sim::Scenario base = base_gib_scenario(3);
  sim::SweepPoint p;
  p.d_avg_s = 0.5;
  p.g_avg = 0.6;
  p.gamma = 7.0;
  p.V = 123.0;
  const sim::Scenario sc = sim::apply_point(base, p);
  CHECK(sc.V == 123.0);
  for (const auto& dev : sc.devices) {
    CHECK(dev.targets.d_avg_s == 0.5);
    CHECK(dev.targets.g_avg == 0.6);
    CHECK(dev.gamma == 7.0);
  }
  // Unset fields keep the base values.
  const sim::Scenario same = sim::apply_point(base, sim::SweepPoint{});
  CHECK(same.V == base.V);
  CHECK(same.devices[1].targets.d_avg_s == base.devices[1].targets.d_avg_s);
}

TEST_CASE("sweep") {
  sim::Scenario sc = base_gib_scenario(1);
  SUBCASE("single point equals a plain run") {
    const auto rows = sim::run_sweep(sc, {sim::SweepPoint{}}, 1);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].status == "ok");
    sim::Engine engine(sc, 1);
    const auto direct = engine.run();
    CHECK(rows[0].summary.p_total_w == direct.summary.p_total_w);
    CHECK(rows[0].summary.convergence_slot == direct.summary.convergence_slot);
  }
  SUBCASE("grid failures are recorded and the sweep continues") {
    sc.max_slots = 4000;
    sim::Engine probe(sc, 1);
    std::vector<sim::SweepPoint> grid;
    sim::SweepPoint bad;
    bad.g_avg = 0.5 * probe.metric_floor(0);  // unattainable
    grid.push_back(bad);
    sim::SweepPoint good;
    grid.push_back(good);
    const auto rows = sim::run_sweep(sc, grid, 1);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].status == "infeasible");
    CHECK(rows[1].status == "ok");
  }
}
