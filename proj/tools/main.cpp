#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "goanet/csv.hpp"
#include "goanet/errors.hpp"
#include "goanet/gib.hpp"
#include "goanet/scenario.hpp"
#include "goanet/sim.hpp"
#include "goanet/surrogate.hpp"

namespace {

namespace fs = std::filesystem;
using goanet::csvio::format_double;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumerical = 4;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::int64_t> seed;
  std::string out_dir = ".";
  int threads = 1;
};

// Write-then-rename so partially written outputs never appear under the
// final name.
void atomic_write(const fs::path& path, const std::string& contents) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw goanet::Error("cannot open '" + tmp.string() + "'");
    out << contents;
  }
  fs::rename(tmp, path);
}

goanet::sim::Scenario load_scenario(const GlobalOptions& g) {
  if (g.config_path.empty()) {
    throw goanet::ConfigError("--config PATH is required");
  }
  goanet::sim::Scenario sc = goanet::scenario::load_file(g.config_path);
  if (g.seed) sc.seed = static_cast<std::uint64_t>(*g.seed);
  return sc;
}

std::string trace_csv(const std::vector<goanet::sim::SlotRecord>& trace,
                      const goanet::sim::Scenario& sc) {
  std::string out =
      "t,device,beta_or_ms,m_x,rate_bps,freq_hz,f_es_hz,delay_s,metric,"
      "p_cpu_w,p_tr_w,p_es_w,queue_t,queue_u,blocked\n";
  for (const auto& rec : trace) {
    for (std::size_t i = 0; i < rec.devices.size(); ++i) {
      const auto& d = rec.devices[i];
      out += std::to_string(rec.t);
      out += ',';
      out += std::to_string(sc.devices[i].id);
      for (const double v : {d.beta_or_ms, d.m_x, d.rate_bps, d.freq_hz,
                             d.f_es_hz, d.delay_s, d.metric, d.p_cpu_w,
                             d.p_tr_w, d.p_es_w, d.queue_t, d.queue_u}) {
        out += ',';
        out += format_double(v);
      }
      out += d.blocked ? ",1\n" : ",0\n";
    }
  }
  return out;
}

std::string summary_text(const goanet::sim::RunSummary& s,
                         const goanet::sim::Scenario& sc) {
  std::string out;
  out += "feasible " + std::string(s.feasible ? "true" : "false") + "\n";
  out += "convergence_slot " + std::to_string(s.convergence_slot) + "\n";
  out += "window " + std::to_string(s.window) + "\n";
  out += "p_total_w " + format_double(s.p_total_w) + "\n";
  out += "p_ed_w " + format_double(s.p_ed_w) + "\n";
  out += "p_es_w " + format_double(s.p_es_w) + "\n";
  for (std::size_t i = 0; i < s.d_avg_s.size(); ++i) {
    const std::string id = std::to_string(sc.devices[i].id);
    out += "d_avg_s[" + id + "] " + format_double(s.d_avg_s[i]) + "\n";
    out += "g_avg[" + id + "] " + format_double(s.g_avg[i]) + "\n";
  }
  return out;
}

std::string summary_json(const goanet::sim::RunSummary& s,
                         const goanet::sim::Scenario& sc) {
  nlohmann::ordered_json j;
  j["feasible"] = s.feasible;
  j["convergence_slot"] = s.convergence_slot;
  j["window"] = s.window;
  j["p_total_w"] = s.p_total_w;
  j["p_ed_w"] = s.p_ed_w;
  j["p_es_w"] = s.p_es_w;
  nlohmann::ordered_json devices = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < s.d_avg_s.size(); ++i) {
    devices.push_back({{"id", sc.devices[i].id},
                       {"d_avg_s", s.d_avg_s[i]},
                       {"g_avg", s.g_avg[i]}});
  }
  j["devices"] = std::move(devices);
  return j.dump(2) + "\n";
}

int cmd_gib_frontier(const GlobalOptions& g, const std::string& source_name,
                     int beta_count, std::optional<double> beta_min,
                     std::optional<double> beta_max) {
  const goanet::sim::Scenario sc = load_scenario(g);
  if (sc.sources.empty()) {
    throw goanet::ConfigError("config has no gib sources");
  }
  std::string name = source_name;
  if (name.empty()) {
    if (sc.sources.size() > 1) {
      throw goanet::ConfigError(
          "config has several sources; pick one with --source");
    }
    name = sc.sources.begin()->first;
  }
  const auto it = sc.sources.find(name);
  if (it == sc.sources.end()) {
    throw goanet::ConfigError("unknown source '" + name + "'");
  }
  const goanet::gib::GaussianSource& src = it->second;
  const goanet::gib::Spectrum sp = goanet::gib::compute_spectrum(src);
  const std::vector<double> grid = goanet::gib::beta_grid(sp);

  const double first_critical = sp.critical_betas.front();
  const double lo = beta_min.value_or(std::max(1.0, 0.5 * first_critical));
  const double hi = beta_max.value_or(10.0 * grid.back());
  if (!(lo > 0) || !(hi > lo) || beta_count < 2) {
    throw goanet::ConfigError("frontier needs 0 < beta_min < beta_max and >= 2 points");
  }

  std::string out = "beta,i_xz_bits,i_zy_bits,nmse,entropy_bits\n";
  for (int i = 0; i < beta_count; ++i) {
    const double t = static_cast<double>(i) / (beta_count - 1);
    const double beta = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
    const goanet::gib::RatePoint pt = goanet::gib::rate_point(src, sp, beta);
    out += format_double(pt.beta);
    for (const double v :
         {pt.i_xz_bits, pt.i_zy_bits, pt.nmse, pt.entropy_bits}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  atomic_write(fs::path(g.out_dir) / "gib_frontier.csv", out);
  return kExitOk;
}

int cmd_simulate(const GlobalOptions& g) {
  const goanet::sim::Scenario sc = load_scenario(g);
  goanet::sim::Engine engine(sc, g.threads);
  const auto result = engine.run();
  atomic_write(fs::path(g.out_dir) / "trace.csv", trace_csv(result.trace, sc));
  atomic_write(fs::path(g.out_dir) / "summary.txt",
               summary_text(result.summary, sc));
  atomic_write(fs::path(g.out_dir) / "summary.json",
               summary_json(result.summary, sc));
  std::cout << summary_text(result.summary, sc);
  return result.summary.feasible ? kExitOk : kExitInfeasible;
}

int cmd_sweep(const GlobalOptions& g, const std::vector<std::string>& specs) {
  const goanet::sim::Scenario sc = load_scenario(g);
  const std::vector<goanet::sim::SweepPoint> grid =
      goanet::scenario::parse_sweep_grid(specs);
  if (grid.empty()) {
    throw goanet::ConfigError("sweep needs at least one --grid dimension");
  }
  const auto rows = goanet::sim::run_sweep(sc, grid, g.threads);

  std::string out =
      "d_avg_target,g_avg_target,gamma,v,status,feasible,convergence_slot,"
      "p_total_w,p_ed_w,p_es_w,d_avg_s,g_avg\n";
  std::size_t failures = 0;
  for (const auto& row : rows) {
    auto opt = [](const std::optional<double>& v) {
      return v ? format_double(*v) : std::string();
    };
    out += opt(row.point.d_avg_s) + ',' + opt(row.point.g_avg) + ',' +
           opt(row.point.gamma) + ',' + opt(row.point.V) + ',';
    std::string status = row.status;
    for (char& c : status) {
      if (c == ',' || c == '\n') c = ';';
    }
    out += status + ',';
    out += row.summary.feasible ? "1," : "0,";
    out += std::to_string(row.summary.convergence_slot) + ',';
    out += format_double(row.summary.p_total_w) + ',';
    out += format_double(row.summary.p_ed_w) + ',';
    out += format_double(row.summary.p_es_w) + ',';
    double d_mean = 0, g_mean = 0;
    const std::size_t k = row.summary.d_avg_s.size();
    for (std::size_t i = 0; i < k; ++i) {
      d_mean += row.summary.d_avg_s[i];
      g_mean += row.summary.g_avg[i];
    }
    if (k > 0) {
      d_mean /= static_cast<double>(k);
      g_mean /= static_cast<double>(k);
    }
    out += format_double(d_mean) + ',' + format_double(g_mean) + '\n';
    if (row.status != "ok") ++failures;
  }
  atomic_write(fs::path(g.out_dir) / "sweep.csv", out);
  std::cout << "sweep: " << rows.size() - failures << "/" << rows.size()
            << " points ok\n";
  return failures == rows.size() ? kExitInfeasible : kExitOk;
}

int cmd_fit_surrogate(const GlobalOptions& g, const std::string& data_path) {
  const goanet::csvio::Table table = goanet::csvio::read_table(data_path);
  if (table.header.size() < 3) {
    throw goanet::ConfigError(
        "fit data needs columns m_x, m_s, distortion with a header row");
  }
  std::vector<goanet::surrogate::FitSample> samples;
  samples.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    if (row.size() < 3) continue;
    samples.push_back(goanet::surrogate::FitSample{
        std::stod(row[0]), std::stod(row[1]), std::stod(row[2])});
  }
  const goanet::surrogate::Params fitted = goanet::surrogate::fit(samples);
  nlohmann::ordered_json j;
  j["a"] = fitted.a;
  j["b"] = fitted.b;
  j["c"] = fitted.c;
  j["residual"] = fitted.fit_residual.value_or(0.0);
  j["samples"] = samples.size();
  atomic_write(fs::path(g.out_dir) / "surrogate_fit.json", j.dump(2) + "\n");
  std::cout << "a " << format_double(fitted.a) << "\nb "
            << format_double(fitted.b) << "\nc " << format_double(fitted.c)
            << "\nresidual " << format_double(fitted.fit_residual.value_or(0.0))
            << "\n";
  return kExitOk;
}

int cmd_validate(const GlobalOptions& g) {
  const goanet::sim::Scenario sc = load_scenario(g);
  // Construction checks everything the parser cannot (sources, grids).
  goanet::sim::Engine engine(sc, 1);
  (void)engine;
  std::cout << goanet::scenario::to_json_text(sc);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-oriented edge network resource allocation simulator"};
  app.require_subcommand(1);

  GlobalOptions g;
  auto add_globals = [&](CLI::App* cmd) {
    cmd->add_option("--config", g.config_path, "Scenario configuration (JSON)");
    cmd->add_option("--seed", g.seed, "Override the scenario seed");
    cmd->add_option("--out", g.out_dir, "Output directory");
    cmd->add_option("--threads", g.threads, "Worker threads for device solves")
        ->check(CLI::PositiveNumber);
  };

  auto* frontier = app.add_subcommand(
      "gib-frontier", "Tabulate the rate/relevance/distortion frontier");
  std::string source_name;
  int beta_count = 100;
  std::optional<double> beta_min, beta_max;
  add_globals(frontier);
  frontier->add_option("--source", source_name, "Source name from the config");
  frontier->add_option("--beta-count", beta_count, "Number of beta samples");
  frontier->add_option("--beta-min", beta_min, "Lowest beta");
  frontier->add_option("--beta-max", beta_max, "Highest beta");

  auto* simulate =
      app.add_subcommand("simulate", "Run one scenario to convergence");
  add_globals(simulate);

  auto* sweep = app.add_subcommand("sweep", "Run a grid of scenarios");
  std::vector<std::string> grid_specs;
  add_globals(sweep);
  sweep->add_option("--grid", grid_specs,
                    "Dimension spec name=v1,v2,... (d_avg, g_avg, gamma, v)");

  auto* fit = app.add_subcommand("fit-surrogate",
                                 "Fit the separable distortion surrogate");
  std::string data_path;
  add_globals(fit);
  fit->add_option("--data", data_path, "CSV with columns m_x, m_s, distortion")
      ->required();

  auto* validate =
      app.add_subcommand("validate", "Check a config and echo its canonical form");
  add_globals(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (frontier->parsed()) {
      return cmd_gib_frontier(g, source_name, beta_count, beta_min, beta_max);
    }
    if (simulate->parsed()) return cmd_simulate(g);
    if (sweep->parsed()) return cmd_sweep(g, grid_specs);
    if (fit->parsed()) return cmd_fit_surrogate(g, data_path);
    if (validate->parsed()) return cmd_validate(g);
  } catch (const goanet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
