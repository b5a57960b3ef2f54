#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "goanet/errors.hpp"
#include "goanet/scenario.hpp"

using namespace goanet;

namespace {

const char* kGibConfig = R"json({
  "scenario": {
    "mode": "gib",
    "seed": 7,
    "max_slots": 50000,
    "summary_window": 1000,
    "convergence": {"window": 500, "tol": 1e-3}
  },
  "lyapunov": {"V": 1e8},
  "channel": {
    "path_exponent": 3.5,
    "offset_db": 24.4,
    "freq_exponent": 1.9,
    "shadow_sigma_db": 3.0,
    "fading": "rayleigh",
    "ref_distance_m": 1.0,
    "ref_freq_hz": 1e9
  },
  "server": {"f_c_max_hz": 1.8e9, "eta": 2.57e-27, "rho_es": 4.0},
  "gib": {
    "sources": {
      "s1": {"explicit": {"dim_x": 1, "dim_y": 1,
                          "cov_x": [1.0], "cov_y": [1.0], "cov_xy": [0.8]}},
      "s2": {"synthetic": {"dim_x": 8, "dim_y": 3, "seed": 7,
                           "correlation": 0.9}}
    }
  },
  "devices": [
    {
      "id": 0,
      "distance_m": 20.0,
      "cpu": {"f_max_hz": 1.8e9, "eta": 2.57e-27, "rho": 4.0,
              "p_cpu_max_w": 15.0},
      "radio": {"bandwidth_hz": 1000.0, "noise_psd_dbm_per_hz": -174.0,
                "max_tx_power_w": 0.1, "carrier_freq_hz": 1e9},
      "targets": {"d_avg_s": 0.01, "g_avg": 0.55},
      "weights": {"epsilon": 1.0, "nu": 1.0, "gamma": 1.0},
      "source": "s2"
    }
  ]
})json";

const char* kSqganConfig = R"json({
  "scenario": {"mode": "sqgan", "seed": 3},
  "lyapunov": {"V": 1e8},
  "channel": {
    "path_exponent": 3.5, "offset_db": 24.4, "freq_exponent": 1.9,
    "shadow_sigma_db": 0.0, "fading": "none",
    "ref_distance_m": 1.0, "ref_freq_hz": 1e9
  },
  "surrogate": {"a": 2.58e-1, "b": 1.20e-1, "c": 2.95e-3,
                "mode": "stationary", "m_min": 1e-4},
  "devices": [
    {
      "id": 1,
      "distance_m": 30.0,
      "cpu": {"f_max_hz": 1e9, "eta": 1e-26, "rho": 16.0},
      "radio": {"bandwidth_hz": 1e5, "noise_psd_w_per_hz": 3.981e-21,
                "max_tx_power_dbm": 26.9897000433601886,
                "carrier_freq_hz": 1e9},
      "targets": {"d_avg_s": 0.05, "g_avg": 0.45},
      "weights": {"epsilon": 1.0, "nu": 1.0}
    }
  ]
})json";

std::string replace_once(std::string text, const std::string& from,
                         const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("gib config parses") {
  const auto sc = scenario::from_json_text(kGibConfig);
  CHECK(sc.mode == sim::Mode::gib);
  CHECK(sc.seed == 7);
  CHECK(sc.max_slots == 50000);
  CHECK(sc.V == 1e8);
  CHECK(sc.server.rho_es.size() == 1);
  REQUIRE(sc.devices.size() == 1);
  CHECK(sc.devices[0].source == "s2");
  CHECK(sc.sources.count("s1") == 1);
  CHECK(sc.sources.count("s2") == 1);
  // dBm noise floor converts to watts.
  CHECK(sc.devices[0].radio.noise_psd_w_per_hz ==
        doctest::Approx(3.981e-21).epsilon(1e-3));
}

TEST_CASE("sqgan config parses") {
  const auto sc = scenario::from_json_text(kSqganConfig);
  CHECK(sc.mode == sim::Mode::sqgan);
  CHECK(sc.surrogate.params.a == doctest::Approx(0.258));
  CHECK(sc.surrogate.metric_noise_std == 0.0);
  // 26.99 dBm is 500 mW.
  CHECK(sc.devices[0].radio.max_tx_power_w ==
        doctest::Approx(0.5).epsilon(1e-9));
  // Defaults fill in.
  CHECK(sc.max_slots == 200000);
  CHECK(sc.summary_window == 1000);
  CHECK(sc.convergence.window == 500);
}

TEST_CASE("echo round-trips to an identical logical scenario") {
  for (const char* text : {kGibConfig, kSqganConfig}) {
    const auto sc = scenario::from_json_text(text);
    const std::string echoed = scenario::to_json_text(sc);
    const auto reparsed = scenario::from_json_text(echoed);
    CHECK(scenario::to_json_text(reparsed) == echoed);
  }
}

TEST_CASE("schema violations name the key path") {
  SUBCASE("unknown key") {
    const std::string bad = replace_once(
        kGibConfig, "\"path_exponent\"", "\"path_exp\"");
    try {
      scenario::from_json_text(bad);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("channel") != std::string::npos);
      CHECK(msg.find("path_exp") != std::string::npos);
    }
  }
  SUBCASE("missing required key") {
    const std::string bad =
        replace_once(kGibConfig, "\"distance_m\": 20.0,", "");
    try {
      scenario::from_json_text(bad);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("devices[0]") != std::string::npos);
      CHECK(msg.find("distance_m") != std::string::npos);
    }
  }
  SUBCASE("both noise keys at once") {
    const std::string bad = replace_once(
        kGibConfig, "\"noise_psd_dbm_per_hz\": -174.0,",
        "\"noise_psd_dbm_per_hz\": -174.0, \"noise_psd_w_per_hz\": 1e-21,");
    CHECK_THROWS_AS(scenario::from_json_text(bad), ConfigError);
  }
  SUBCASE("bad mode") {
    const std::string bad =
        replace_once(kGibConfig, "\"mode\": \"gib\"", "\"mode\": \"ibg\"");
    CHECK_THROWS_AS(scenario::from_json_text(bad), ConfigError);
  }
  SUBCASE("unknown source reference") {
    const std::string bad =
        replace_once(kGibConfig, "\"source\": \"s2\"", "\"source\": \"nope\"");
    CHECK_THROWS_AS(scenario::from_json_text(bad), ConfigError);
  }
  SUBCASE("invalid JSON") {
    CHECK_THROWS_AS(scenario::from_json_text("{nope"), ConfigError);
  }
  SUBCASE("device ids must be ascending") {
    // Duplicate the device block with a smaller id in second position.
    std::string two = kGibConfig;
    const std::string dev_open = "{\n      \"id\": 0,";
    const auto pos = two.find(dev_open);
    REQUIRE(pos != std::string::npos);
    const auto end = two.find("    }\n  ]");
    REQUIRE(end != std::string::npos);
    std::string block = two.substr(pos, end + 5 - pos);
    std::string second = block;
    const auto idpos = second.find("\"id\": 0");
    second.replace(idpos, 7, "\"id\": -1");
    two.replace(end + 5, 0, ",\n    " + second);
    CHECK_THROWS_AS(scenario::from_json_text(two), ConfigError);
  }
}

TEST_CASE("sweep grid parsing") {
  SUBCASE("one dimension") {
    const auto grid = scenario::parse_sweep_grid({"gamma=0.5,1,8,30,50"});
    REQUIRE(grid.size() == 5);
    CHECK(grid[0].gamma == 0.5);
    CHECK(grid[4].gamma == 50.0);
    CHECK_FALSE(grid[0].d_avg_s.has_value());
  }
  SUBCASE("cartesian product") {
    const auto grid =
        scenario::parse_sweep_grid({"d_avg=0.01,0.02", "g_avg=0.4,0.5,0.6"});
    REQUIRE(grid.size() == 6);
    CHECK(grid[0].d_avg_s == 0.01);
    CHECK(grid[0].g_avg == 0.4);
    CHECK(grid[5].d_avg_s == 0.02);
    CHECK(grid[5].g_avg == 0.6);
  }
  SUBCASE("rejects unknown dimensions and junk") {
    CHECK_THROWS_AS(scenario::parse_sweep_grid({"vv=1"}), ConfigError);
    CHECK_THROWS_AS(scenario::parse_sweep_grid({"gamma=1,moo"}), ConfigError);
    CHECK_THROWS_AS(scenario::parse_sweep_grid({"gamma"}), ConfigError);
  }
  SUBCASE("empty spec list yields an empty grid") {
    CHECK(scenario::parse_sweep_grid({}).empty());
  }
}
