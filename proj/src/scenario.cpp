#include "goanet/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "goanet/errors.hpp"

namespace goanet::scenario {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

const json& require(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path, std::string("missing key '") + key + "'");
  return *it;
}

const json* maybe(const json& obj, const char* key) {
  if (!obj.is_object()) return nullptr;
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail(path, "unknown key '" + item.key() + "'");
  }
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

double num(const json& obj, const std::string& path, const char* key) {
  return as_number(require(obj, path, key), path + "." + key);
}

double num_or(const json& obj, const std::string& path, const char* key,
              double fallback) {
  const json* j = maybe(obj, key);
  return j ? as_number(*j, path + "." + key) : fallback;
}

std::int64_t integer(const json& obj, const std::string& path, const char* key) {
  const json& j = require(obj, path, key);
  if (!j.is_number_integer()) fail(path + "." + key, "expected an integer");
  return j.get<std::int64_t>();
}

std::string str(const json& obj, const std::string& path, const char* key) {
  const json& j = require(obj, path, key);
  if (!j.is_string()) fail(path + "." + key, "expected a string");
  return j.get<std::string>();
}

Eigen::MatrixXd matrix(const json& j, const std::string& path, int rows,
                       int cols) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(rows * cols)) {
    fail(path, "expected a row-major list of " + std::to_string(rows * cols) +
                   " numbers");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t idx = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m(r, c) = as_number(j[idx], path + "[" + std::to_string(idx) + "]");
      ++idx;
    }
  }
  return m;
}

gib::GaussianSource parse_source(const json& j, const std::string& path) {
  reject_unknown(j, path, {"explicit", "synthetic"});
  if (const json* e = maybe(j, "explicit")) {
    const std::string p = path + ".explicit";
    reject_unknown(*e, p, {"dim_x", "dim_y", "cov_x", "cov_y", "cov_xy"});
    const int dx = static_cast<int>(integer(*e, p, "dim_x"));
    const int dy = static_cast<int>(integer(*e, p, "dim_y"));
    if (dx < 1 || dy < 1) fail(p, "dims must be >= 1");
    try {
      return gib::make_source(matrix(require(*e, p, "cov_x"), p + ".cov_x", dx, dx),
                              matrix(require(*e, p, "cov_y"), p + ".cov_y", dy, dy),
                              matrix(require(*e, p, "cov_xy"), p + ".cov_xy", dx, dy));
    } catch (const ConfigError& err) {
      fail(p, err.what());
    }
  }
  if (const json* s = maybe(j, "synthetic")) {
    const std::string p = path + ".synthetic";
    reject_unknown(*s, p, {"dim_x", "dim_y", "seed", "correlation"});
    return gib::synthetic_source(static_cast<int>(integer(*s, p, "dim_x")),
                                 static_cast<int>(integer(*s, p, "dim_y")),
                                 static_cast<std::uint64_t>(integer(*s, p, "seed")),
                                 num(*s, p, "correlation"));
  }
  fail(path, "source needs either 'explicit' or 'synthetic'");
}

sim::DeviceConfig parse_device(const json& j, const std::string& path,
                               bool is_gib) {
  reject_unknown(j, path,
                 {"id", "distance_m", "cpu", "radio", "targets", "weights",
                  "source"});
  sim::DeviceConfig dev;
  dev.id = static_cast<int>(integer(j, path, "id"));
  dev.distance_m = num(j, path, "distance_m");

  const json& cpu = require(j, path, "cpu");
  const std::string cpu_path = path + ".cpu";
  reject_unknown(cpu, cpu_path, {"f_max_hz", "eta", "rho", "p_cpu_max_w"});
  dev.cpu.f_max_hz = num(cpu, cpu_path, "f_max_hz");
  dev.cpu.eta = num(cpu, cpu_path, "eta");
  dev.cpu.rho = num(cpu, cpu_path, "rho");
  dev.cpu.p_cpu_max_w = num_or(cpu, cpu_path, "p_cpu_max_w", 0.0);

  const json& radio = require(j, path, "radio");
  const std::string radio_path = path + ".radio";
  reject_unknown(radio, radio_path,
                 {"bandwidth_hz", "noise_psd_w_per_hz", "noise_psd_dbm_per_hz",
                  "max_tx_power_w", "max_tx_power_dbm", "carrier_freq_hz"});
  dev.radio.bandwidth_hz = num(radio, radio_path, "bandwidth_hz");
  dev.radio.carrier_freq_hz = num(radio, radio_path, "carrier_freq_hz");
  const bool has_psd_w = maybe(radio, "noise_psd_w_per_hz") != nullptr;
  const bool has_psd_dbm = maybe(radio, "noise_psd_dbm_per_hz") != nullptr;
  if (has_psd_w == has_psd_dbm) {
    fail(radio_path,
         "exactly one of noise_psd_w_per_hz / noise_psd_dbm_per_hz is required");
  }
  dev.radio.noise_psd_w_per_hz =
      has_psd_w ? num(radio, radio_path, "noise_psd_w_per_hz")
                : channel::dbm_to_watt(num(radio, radio_path, "noise_psd_dbm_per_hz"));
  const bool has_pw_w = maybe(radio, "max_tx_power_w") != nullptr;
  const bool has_pw_dbm = maybe(radio, "max_tx_power_dbm") != nullptr;
  if (has_pw_w == has_pw_dbm) {
    fail(radio_path,
         "exactly one of max_tx_power_w / max_tx_power_dbm is required");
  }
  dev.radio.max_tx_power_w =
      has_pw_w ? num(radio, radio_path, "max_tx_power_w")
               : channel::dbm_to_watt(num(radio, radio_path, "max_tx_power_dbm"));

  const json& targets = require(j, path, "targets");
  const std::string targets_path = path + ".targets";
  reject_unknown(targets, targets_path, {"d_avg_s", "g_avg"});
  dev.targets.d_avg_s = num(targets, targets_path, "d_avg_s");
  dev.targets.g_avg = num(targets, targets_path, "g_avg");

  const json& weights = require(j, path, "weights");
  const std::string weights_path = path + ".weights";
  reject_unknown(weights, weights_path, {"epsilon", "nu", "gamma"});
  dev.epsilon = num(weights, weights_path, "epsilon");
  dev.nu = num(weights, weights_path, "nu");
  dev.gamma = num_or(weights, weights_path, "gamma", 1.0);

  if (is_gib) {
    dev.source = str(j, path, "source");
  } else if (maybe(j, "source")) {
    dev.source = str(j, path, "source");
  }
  return dev;
}

}  // namespace

sim::Scenario from_json_text(const std::string& text) {
  json root = json::parse(text, nullptr, false);
  if (root.is_discarded()) throw ConfigError("config: invalid JSON");
  reject_unknown(root, "config",
                 {"scenario", "lyapunov", "channel", "server", "surrogate",
                  "gib", "devices"});

  sim::Scenario sc;
  const json& meta = require(root, "config", "scenario");
  reject_unknown(meta, "scenario",
                 {"mode", "seed", "max_slots", "summary_window", "convergence"});
  const std::string mode = str(meta, "scenario", "mode");
  if (mode == "gib") {
    sc.mode = sim::Mode::gib;
  } else if (mode == "sqgan") {
    sc.mode = sim::Mode::sqgan;
  } else {
    fail("scenario.mode", "expected \"gib\" or \"sqgan\"");
  }
  sc.seed = static_cast<std::uint64_t>(integer(meta, "scenario", "seed"));
  sc.max_slots = maybe(meta, "max_slots")
                     ? integer(meta, "scenario", "max_slots")
                     : 200000;
  sc.summary_window =
      maybe(meta, "summary_window")
          ? static_cast<int>(integer(meta, "scenario", "summary_window"))
          : 1000;
  if (sc.max_slots < 1) fail("scenario.max_slots", "must be >= 1");
  if (sc.summary_window < 1) fail("scenario.summary_window", "must be >= 1");
  if (const json* conv = maybe(meta, "convergence")) {
    reject_unknown(*conv, "scenario.convergence", {"window", "tol"});
    sc.convergence.window =
        maybe(*conv, "window")
            ? static_cast<int>(integer(*conv, "scenario.convergence", "window"))
            : 500;
    sc.convergence.tol = num_or(*conv, "scenario.convergence", "tol", 1e-3);
    if (sc.convergence.window < 100) {
      fail("scenario.convergence.window", "must be >= 100");
    }
    if (!(sc.convergence.tol > 0)) {
      fail("scenario.convergence.tol", "must be positive");
    }
  }

  const json& lyapunov = require(root, "config", "lyapunov");
  reject_unknown(lyapunov, "lyapunov", {"V"});
  sc.V = num(lyapunov, "lyapunov", "V");
  if (sc.V < 0) fail("lyapunov.V", "must be nonnegative");

  const json& ch = require(root, "config", "channel");
  reject_unknown(ch, "channel",
                 {"path_exponent", "offset_db", "freq_exponent",
                  "shadow_sigma_db", "fading", "ref_distance_m", "ref_freq_hz"});
  sc.channel_params.path_exponent = num(ch, "channel", "path_exponent");
  sc.channel_params.offset_db = num(ch, "channel", "offset_db");
  sc.channel_params.freq_exponent = num(ch, "channel", "freq_exponent");
  sc.channel_params.shadow_sigma_db = num(ch, "channel", "shadow_sigma_db");
  sc.channel_params.ref_distance_m = num(ch, "channel", "ref_distance_m");
  sc.channel_params.ref_freq_hz = num(ch, "channel", "ref_freq_hz");
  if (sc.channel_params.shadow_sigma_db < 0) {
    fail("channel.shadow_sigma_db", "must be >= 0");
  }
  if (!(sc.channel_params.ref_distance_m > 0) ||
      !(sc.channel_params.ref_freq_hz > 0)) {
    fail("channel", "reference distance and frequency must be positive");
  }
  const std::string fading = str(ch, "channel", "fading");
  if (fading == "rayleigh") {
    sc.fading = channel::Fading::rayleigh;
  } else if (fading == "none") {
    sc.fading = channel::Fading::none;
  } else {
    fail("channel.fading", "expected \"rayleigh\" or \"none\"");
  }

  const bool is_gib = sc.mode == sim::Mode::gib;
  if (const json* server = maybe(root, "server")) {
    reject_unknown(*server, "server", {"f_c_max_hz", "eta", "rho_es"});
    sc.server.f_c_max_hz = num(*server, "server", "f_c_max_hz");
    sc.server.eta = num(*server, "server", "eta");
    const json& rho = require(*server, "server", "rho_es");
    sc.server.rho_es.clear();
    if (rho.is_number()) {
      sc.server.rho_es.push_back(rho.get<double>());
    } else if (rho.is_array() && !rho.empty()) {
      for (std::size_t i = 0; i < rho.size(); ++i) {
        sc.server.rho_es.push_back(
            as_number(rho[i], "server.rho_es[" + std::to_string(i) + "]"));
      }
    } else {
      fail("server.rho_es", "expected a number or a non-empty array");
    }
    for (double r : sc.server.rho_es) {
      if (!(r > 0)) fail("server.rho_es", "entries must be positive");
    }
    if (!(sc.server.f_c_max_hz > 0) || !(sc.server.eta > 0)) {
      fail("server", "f_c_max_hz and eta must be positive");
    }
  } else if (is_gib) {
    fail("config", "missing key 'server' (required in gib mode)");
  }

  if (const json* sur = maybe(root, "surrogate")) {
    reject_unknown(*sur, "surrogate",
                   {"a", "b", "c", "mode", "m_min", "metric_noise_std"});
    sc.surrogate.params.a = num(*sur, "surrogate", "a");
    sc.surrogate.params.b = num(*sur, "surrogate", "b");
    sc.surrogate.params.c = num(*sur, "surrogate", "c");
    if (!(sc.surrogate.params.a > 0) || !(sc.surrogate.params.b > 0) ||
        !(sc.surrogate.params.c > 0)) {
      fail("surrogate", "a, b, c must be positive");
    }
    const std::string rmode = str(*sur, "surrogate", "mode");
    if (rmode == "stationary") {
      sc.surrogate.mode = surrogate::ReductionMode::stationary;
    } else if (rmode == "paper") {
      sc.surrogate.mode = surrogate::ReductionMode::paper;
    } else {
      fail("surrogate.mode", "expected \"stationary\" or \"paper\"");
    }
    sc.surrogate.m_min =
        num_or(*sur, "surrogate", "m_min", surrogate::kDefaultMaskFloor);
    sc.surrogate.metric_noise_std =
        num_or(*sur, "surrogate", "metric_noise_std", 0.0);
    if (!(sc.surrogate.m_min > 0) || sc.surrogate.m_min >= 1.0) {
      fail("surrogate.m_min", "must lie in (0, 1)");
    }
    if (sc.surrogate.metric_noise_std < 0) {
      fail("surrogate.metric_noise_std", "must be >= 0");
    }
  } else if (!is_gib) {
    fail("config", "missing key 'surrogate' (required in sqgan mode)");
  }

  if (const json* gib_section = maybe(root, "gib")) {
    reject_unknown(*gib_section, "gib", {"sources"});
    const json& sources = require(*gib_section, "gib", "sources");
    if (!sources.is_object() || sources.empty()) {
      fail("gib.sources", "expected a non-empty object of named sources");
    }
    for (const auto& item : sources.items()) {
      sc.sources.emplace(item.key(),
                         parse_source(item.value(), "gib.sources." + item.key()));
    }
  } else if (is_gib) {
    fail("config", "missing key 'gib' (required in gib mode)");
  }

  const json& devices = require(root, "config", "devices");
  if (!devices.is_array() || devices.empty()) {
    fail("devices", "expected a non-empty array");
  }
  std::set<int> ids;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const std::string path = "devices[" + std::to_string(i) + "]";
    sim::DeviceConfig dev = parse_device(devices[i], path, is_gib);
    if (!ids.insert(dev.id).second) {
      fail(path + ".id", "duplicate device id");
    }
    if (dev.distance_m < sc.channel_params.ref_distance_m) {
      fail(path + ".distance_m", "below channel.ref_distance_m");
    }
    if (is_gib && sc.sources.find(dev.source) == sc.sources.end()) {
      fail(path + ".source", "unknown source '" + dev.source + "'");
    }
    sc.devices.push_back(std::move(dev));
  }
  if (is_gib && sc.server.rho_es.size() != 1 &&
      sc.server.rho_es.size() != sc.devices.size()) {
    fail("server.rho_es", "expected one value or one per device");
  }
  // Trace rows are ordered by (t, device id) and server.rho_es is
  // positional, so the devices array must already be sorted.
  for (std::size_t i = 1; i < sc.devices.size(); ++i) {
    if (sc.devices[i].id < sc.devices[i - 1].id) {
      fail("devices", "device ids must be ascending");
    }
  }
  return sc;
}

sim::Scenario load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string to_json_text(const sim::Scenario& sc) {
  ordered_json root;
  ordered_json& meta = root["scenario"];
  meta["mode"] = sc.mode == sim::Mode::gib ? "gib" : "sqgan";
  meta["seed"] = sc.seed;
  meta["max_slots"] = sc.max_slots;
  meta["summary_window"] = sc.summary_window;
  meta["convergence"] = {{"window", sc.convergence.window},
                         {"tol", sc.convergence.tol}};
  root["lyapunov"] = {{"V", sc.V}};
  root["channel"] = {
      {"path_exponent", sc.channel_params.path_exponent},
      {"offset_db", sc.channel_params.offset_db},
      {"freq_exponent", sc.channel_params.freq_exponent},
      {"shadow_sigma_db", sc.channel_params.shadow_sigma_db},
      {"fading", sc.fading == channel::Fading::rayleigh ? "rayleigh" : "none"},
      {"ref_distance_m", sc.channel_params.ref_distance_m},
      {"ref_freq_hz", sc.channel_params.ref_freq_hz}};
  if (sc.mode == sim::Mode::gib) {
    ordered_json server;
    server["f_c_max_hz"] = sc.server.f_c_max_hz;
    server["eta"] = sc.server.eta;
    if (sc.server.rho_es.size() == 1) {
      server["rho_es"] = sc.server.rho_es.front();
    } else {
      server["rho_es"] = sc.server.rho_es;
    }
    root["server"] = std::move(server);
    ordered_json sources;
    for (const auto& [name, src] : sc.sources) {
      ordered_json e;
      e["dim_x"] = src.dim_x();
      e["dim_y"] = src.dim_y();
      auto flat = [](const Eigen::MatrixXd& m) {
        std::vector<double> v;
        v.reserve(static_cast<std::size_t>(m.size()));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
          for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
        }
        return v;
      };
      e["cov_x"] = flat(src.cov_x);
      e["cov_y"] = flat(src.cov_y);
      e["cov_xy"] = flat(src.cov_xy);
      sources[name] = {{"explicit", std::move(e)}};
    }
    root["gib"] = {{"sources", std::move(sources)}};
  } else {
    root["surrogate"] = {
        {"a", sc.surrogate.params.a},
        {"b", sc.surrogate.params.b},
        {"c", sc.surrogate.params.c},
        {"mode", sc.surrogate.mode == surrogate::ReductionMode::stationary
                     ? "stationary"
                     : "paper"},
        {"m_min", sc.surrogate.m_min},
        {"metric_noise_std", sc.surrogate.metric_noise_std}};
  }
  ordered_json devices = ordered_json::array();
  for (const auto& dev : sc.devices) {
    ordered_json d;
    d["id"] = dev.id;
    d["distance_m"] = dev.distance_m;
    d["cpu"] = {{"f_max_hz", dev.cpu.f_max_hz},
                {"eta", dev.cpu.eta},
                {"rho", dev.cpu.rho},
                {"p_cpu_max_w", dev.cpu.p_cpu_max_w}};
    d["radio"] = {{"bandwidth_hz", dev.radio.bandwidth_hz},
                  {"noise_psd_w_per_hz", dev.radio.noise_psd_w_per_hz},
                  {"max_tx_power_w", dev.radio.max_tx_power_w},
                  {"carrier_freq_hz", dev.radio.carrier_freq_hz}};
    d["targets"] = {{"d_avg_s", dev.targets.d_avg_s}, {"g_avg", dev.targets.g_avg}};
    d["weights"] = {{"epsilon", dev.epsilon}, {"nu", dev.nu}, {"gamma", dev.gamma}};
    if (sc.mode == sim::Mode::gib) d["source"] = dev.source;
    devices.push_back(std::move(d));
  }
  root["devices"] = std::move(devices);
  return root.dump(2) + "\n";
}

std::vector<sim::SweepPoint> parse_sweep_grid(
    const std::vector<std::string>& dimension_specs) {
  struct Dimension {
    std::string name;
    std::vector<double> values;
  };
  std::vector<Dimension> dims;
  for (const std::string& spec : dimension_specs) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size()) {
      throw ConfigError("sweep grid spec must look like name=v1,v2,...: '" +
                        spec + "'");
    }
    Dimension dim;
    dim.name = spec.substr(0, eq);
    if (dim.name != "d_avg" && dim.name != "g_avg" && dim.name != "gamma" &&
        dim.name != "v") {
      throw ConfigError("unknown sweep dimension '" + dim.name +
                        "' (expected d_avg, g_avg, gamma or v)");
    }
    std::size_t start = eq + 1;
    while (start <= spec.size()) {
      const std::size_t pos = spec.find(',', start);
      const std::string tok =
          spec.substr(start, pos == std::string::npos ? pos : pos - start);
      try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        dim.values.push_back(v);
      } catch (const std::exception&) {
        throw ConfigError("sweep grid value '" + tok + "' is not a number");
      }
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (dim.values.empty()) {
      throw ConfigError("sweep dimension '" + dim.name + "' has no values");
    }
    dims.push_back(std::move(dim));
  }

  std::vector<sim::SweepPoint> grid;
  if (dims.empty()) return grid;
  grid.push_back(sim::SweepPoint{});
  for (const Dimension& dim : dims) {
    std::vector<sim::SweepPoint> next;
    next.reserve(grid.size() * dim.values.size());
    for (const sim::SweepPoint& base : grid) {
      for (const double v : dim.values) {
        sim::SweepPoint p = base;
        if (dim.name == "d_avg") p.d_avg_s = v;
        if (dim.name == "g_avg") p.g_avg = v;
        if (dim.name == "gamma") p.gamma = v;
        if (dim.name == "v") p.V = v;
        next.push_back(p);
      }
    }
    grid = std::move(next);
  }
  return grid;
}

}  // namespace goanet::scenario
