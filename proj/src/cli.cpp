#include "ndiff/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "ndiff/io.hpp"
#include "ndiff/methods.hpp"
#include "ndiff/sims.hpp"
#include "ndiff/spectral.hpp"
#include "ndiff/tune.hpp"

namespace ndiff::cli {

namespace {

using json = nlohmann::ordered_json;

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json manifest(const std::string& command, const std::string& input, const std::string& method, const Params& phi,
              std::uint64_t seed) {
  json m;
  m["command"] = command;
  m["input"] = input;
  m["method"] = method;
  json p = json::object();
  for (const auto& [k, v] : phi) p[k] = v;
  m["phi"] = p;
  m["seed"] = seed;
  m["version"] = kVersion;
  m["timestamp"] = utc_now();
  return m;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

Params parse_params(const std::vector<std::string>& kv) {
  Params p;
  for (const auto& s : kv) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--param expects name=value, got '" + s + "'");
    const std::string name = s.substr(0, eq), val = s.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(val, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != val.size()) throw UsageError("--param " + name + ": '" + val + "' is not a number");
    p[name] = v;
  }
  return p;
}

void emit_csv(const io::Table& t, const std::string& path, std::ostream& out) {
  if (path.empty())
    io::write_csv(out, t);
  else
    io::write_csv(path, t);
}

// --- commands ---

struct DiffArgs {
  std::string input, method, out, column = "y";
  std::vector<std::string> params;
  int nu = 0;
};

int cmd_diff(const DiffArgs& a, std::ostream& out) {
  const Signal s = io::read_signal(a.input, a.column);
  Params p = parse_params(a.params);
  if (a.nu > 0) p["nu"] = a.nu;
  const auto r = run_method(a.method, s, p);
  io::Table t{{"t", "y", "x_hat", "dxdt"}, {s.t(), s.values(), r.smoothed, r.derivative}};
  emit_csv(t, a.out, out);
  if (!a.out.empty()) {
    auto m = manifest("diff", a.input, r.method, r.phi, 0);
    m["converged"] = r.diagnostics.converged;
    m["iterations"] = r.diagnostics.iterations;
    m["warnings"] = r.diagnostics.warnings;
    write_json(a.out + ".json", m);
  }
  return kExitOk;
}

struct TuneArgs {
  std::string input, method, out, column = "y";
  double cutoff = 3.0;
  bool outliers = false;
  std::uint64_t seed = 0;
  int starts = 10, max_evals = 200;
};

int cmd_tune(const TuneArgs& a, std::ostream& out) {
  const Signal s = io::read_signal(a.input, a.column);
  TuneSpec spec = TuneSpec::for_cutoff(a.cutoff, s.grid().mean_dt(), a.outliers, a.seed);
  spec.starts = a.starts;
  spec.max_evals = a.max_evals;
  const auto res = autotune(a.method, s, spec);
  auto m = manifest("tune", a.input, a.method, res.config.values(), a.seed);
  m["cutoff_hz"] = a.cutoff;
  m["gamma"] = spec.gamma;
  m["huber_m"] = spec.huber_m;
  m["loss"] = res.loss;
  m["evaluations"] = res.evaluations;
  m["failures"] = res.failures;
  if (a.out.empty())
    out << m.dump(2) << '\n';
  else
    write_json(a.out, m);
  return kExitOk;
}

struct SimArgs {
  std::string case_name = "cruise_control", noise = "normal", out;
  double dt = 0.01, t_span = 4.0, scale = 1.0;
  bool outliers = false;
  std::uint64_t seed = 0;
};

int cmd_simulate(const SimArgs& a, std::ostream& out) {
  const auto sim = simulate({a.case_name, a.t_span, a.dt});
  const NoiseSpec ns{parse_noise_family(a.noise), a.scale, a.outliers, a.seed};
  const Signal y = add_noise(sim.grid, sim.x, ns);
  io::Table t{{"t", "x_true", "dxdt_true", "y"}, {sim.grid.points(), sim.x, sim.xdot, y.values()}};
  emit_csv(t, a.out, out);
  if (!a.out.empty()) {
    auto m = manifest("simulate", "", "", {{"dt", a.dt}, {"t_span", a.t_span}, {"scale", a.scale}}, a.seed);
    m["case"] = a.case_name;
    m["noise"] = a.noise;
    m["outliers"] = a.outliers;
    write_json(a.out + ".json", m);
  }
  return kExitOk;
}

SweepConfig parse_bench_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("bench config: " + std::string(e.what()));
  }
  SweepConfig c;
  try {
    c.methods = j.at("methods").get<std::vector<std::string>>();
    c.cases = j.at("cases").get<std::vector<std::string>>();
    c.axis = parse_axis(j.at("axis").get<std::string>());
    for (const auto& v : j.at("values")) {
      if (v.is_string())
        c.values.push_back(c.axis == SweepAxis::NoiseType ? double(parse_noise_family(v.get<std::string>()))
                                                          : std::stod(v.get<std::string>()));
      else if (v.is_boolean())
        c.values.push_back(v.get<bool>() ? 1.0 : 0.0);
      else
        c.values.push_back(v.get<double>());
    }
    c.seeds = j.value("seeds", c.seeds);
    c.seed = j.value("seed", c.seed);
    c.cutoff_hz = j.value("cutoff_hz", c.cutoff_hz);
    c.dt = j.value("dt", c.dt);
    c.T = j.value("t_span", c.T);
    c.noise_scale = j.value("noise_scale", c.noise_scale);
    if (j.contains("noise")) c.noise = parse_noise_family(j.at("noise").get<std::string>());
    c.outliers = j.value("outliers", c.outliers);
    c.tune_starts = j.value("tune_starts", c.tune_starts);
    c.tune_max_evals = j.value("tune_max_evals", c.tune_max_evals);
  } catch (const json::exception& e) {
    throw ValidationError("bench config: " + std::string(e.what()));
  }
  if (c.axis == SweepAxis::NoiseType)
    for (double v : c.values)
      if (v != 0.0 && v != 1.0 && v != 2.0) throw ValidationError("noise_type values must be normal, laplace or uniform");
  return c;
}

int cmd_bench(const std::string& config, const std::string& out_dir, std::ostream& out) {
  const auto cfg = parse_bench_config(config);
  const auto res = benchmark_sweep(cfg);
  std::filesystem::create_directories(out_dir);

  std::ofstream csv(out_dir + "/bench.csv", std::ios::binary);
  if (!csv) throw ValidationError("cannot write into '" + out_dir + "'");
  csv << "method,case,axis,value,n_ok,n_failed,rmse_mean,rmse_std,ec_mean,ec_std\n";
  for (const auto& r : res.rows)
    csv << r.method << ',' << r.case_name << ',' << to_string(cfg.axis) << ',' << io::format_real(r.axis_value) << ','
        << r.n_ok << ',' << r.n_failed << ',' << io::format_real(r.rmse_mean) << ',' << io::format_real(r.rmse_std)
        << ',' << io::format_real(r.ec_mean) << ',' << io::format_real(r.ec_std) << '\n';

  json s;
  s["command"] = "bench";
  s["config"] = config;
  s["axis"] = to_string(cfg.axis);
  s["version"] = kVersion;
  s["timestamp"] = utc_now();
  json verdicts = json::array();
  for (const auto& m : cfg.methods)
    for (const auto& c : cfg.cases)
      verdicts.push_back({{"method", m}, {"case", c}, {"rmse_monotone_increasing", res.rmse_increasing(m, c)}});
  s["verdicts"] = verdicts;
  json fails = json::array();
  for (const auto& c : res.cells)
    if (!c.ok)
      fails.push_back({{"method", c.method}, {"case", c.case_name}, {"value", c.axis_value},
                       {"replicate", c.replicate}, {"error", c.error}});
  s["failures"] = fails;
  s["cells"] = res.cells.size();
  write_json(out_dir + "/summary.json", s);

  out << "wrote " << out_dir << "/bench.csv (" << res.rows.size() << " rows), " << res.failures << " failed cells\n";
  if (res.failures == 0) return kExitOk;
  return res.failures == res.cells.size() ? kExitNumeric : kExitPartial;
}

int cmd_spectrum(const std::string& input, const std::string& column, const std::string& path, std::ostream& out) {
  const Signal s = io::read_signal(input, column);
  if (!s.grid().is_uniform()) throw ValidationError("spectrum requires a uniform grid");
  const auto ps = power_spectrum(s);
  emit_csv(io::Table{{"freq_hz", "power_db"}, {ps.freq_hz, ps.power_db}}, path, out);
  if (!path.empty()) write_json(path + ".json", manifest("spectrum", input, "", {}, 0));
  return kExitOk;
}

int cmd_methods(const std::string& input, std::ostream& out) {
  const Signal s = input.empty() ? Signal(Grid::uniform(0.0, 0.01, 400), std::vector<double>(400, 0.0))
                                 : io::read_signal(input);
  for (const auto& m : method_registry()) out << describe_schema(m.name, s);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ndiff: numerical differentiation of noisy time series"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  DiffArgs da;
  auto* diff = app.add_subcommand("diff", "differentiate a t,y CSV");
  diff->add_option("input", da.input, "input CSV with columns t and y")->required();
  diff->add_option("--method", da.method, "method name (see `methods`)")->required();
  diff->add_option("--param", da.params, "method parameter name=value (repeatable)");
  diff->add_option("--nu", da.nu, "derivative or model order, for methods that take one");
  diff->add_option("--y-column", da.column, "column holding the samples (default y)");
  diff->add_option("--out", da.out, "output CSV (default stdout)");

  TuneArgs ta;
  auto* tune = app.add_subcommand("tune", "choose hyperparameters by the robust proxy loss");
  tune->add_option("input", ta.input, "input CSV with columns t and y")->required();
  tune->add_option("--method", ta.method)->required();
  tune->add_option("--cutoff-hz", ta.cutoff, "signal bandlimit used for gamma")->check(CLI::PositiveNumber);
  tune->add_flag("--outliers", ta.outliers, "data has outliers (Huber M = 2 instead of 6)");
  tune->add_option("--seed", ta.seed);
  tune->add_option("--starts", ta.starts)->check(CLI::PositiveNumber);
  tune->add_option("--max-evals", ta.max_evals)->check(CLI::PositiveNumber);
  tune->add_option("--y-column", ta.column, "column holding the samples (default y)");
  tune->add_option("--out", ta.out, "output JSON (default stdout)");

  SimArgs sa;
  auto* sim = app.add_subcommand("simulate", "generate a benchmark signal");
  sim->add_option("--case", sa.case_name);
  sim->add_option("--dt", sa.dt);
  sim->add_option("--t-span", sa.t_span);
  sim->add_option("--noise", sa.noise, "normal, laplace or uniform");
  sim->add_option("--scale", sa.scale);
  sim->add_flag("--outliers", sa.outliers);
  sim->add_option("--seed", sa.seed);
  sim->add_option("--out", sa.out, "output CSV (default stdout)");

  std::string bench_config, bench_out = "bench_out";
  auto* bench = app.add_subcommand("bench", "run a benchmark sweep");
  bench->add_option("--config", bench_config, "sweep configuration JSON")->required();
  bench->add_option("--out-dir", bench_out);

  std::string spec_in, spec_out, spec_col = "y";
  auto* spectrum = app.add_subcommand("spectrum", "power spectrum of a t,y CSV");
  spectrum->add_option("input", spec_in)->required();
  spectrum->add_option("--y-column", spec_col, "column holding the samples (default y)");
  spectrum->add_option("--out", spec_out, "output CSV (default stdout)");

  std::string methods_in;
  auto* methods = app.add_subcommand("methods", "list methods and their parameters");
  methods->add_option("input", methods_in, "optional t,y CSV used to compute bounds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*diff) return cmd_diff(da, out);
    if (*tune) return cmd_tune(ta, out);
    if (*sim) return cmd_simulate(sa, out);
    if (*bench) return cmd_bench(bench_config, bench_out, out);
    if (*spectrum) return cmd_spectrum(spec_in, spec_col, spec_out, out);
    if (*methods) return cmd_methods(methods_in, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UnknownNameError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const UnsupportedMethodError& e) {
    err << "unsupported: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace ndiff::cli
