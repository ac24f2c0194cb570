#include "ndiff/sims.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>

#include "ndiff/methods.hpp"
#include "ndiff/parallel.hpp"
#include "ndiff/rng.hpp"
#include "ndiff/tune.hpp"

namespace ndiff {

namespace {

constexpr double kPi = std::numbers::pi;

using State3 = std::array<double, 3>;

State3 lorenz_rhs(const State3& s) {
  constexpr double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0;
  return {sigma * (s[1] - s[0]), s[0] * (rho - s[2]) - s[1], s[0] * s[1] - beta * s[2]};
}

State3 rk4_step(const State3& s, double h) {
  auto add = [](const State3& a, const State3& b, double k) {
    return State3{a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]};
  };
  const auto k1 = lorenz_rhs(s);
  const auto k2 = lorenz_rhs(add(s, k1, h / 2));
  const auto k3 = lorenz_rhs(add(s, k2, h / 2));
  const auto k4 = lorenz_rhs(add(s, k3, h));
  State3 out;
  for (int i = 0; i < 3; ++i) out[i] = s[i] + h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  return out;
}

// A point on the attractor, reached from (1, 1, 1) with a fixed fine step so
// that every dt starts from the same state.
State3 lorenz_start() {
  State3 s{1.0, 1.0, 1.0};
  for (int i = 0; i < 10000; ++i) s = rk4_step(s, 1e-3);
  return s;
}

}  // namespace

const std::vector<std::string>& case_names() {
  static const std::vector<std::string> names{"sine_sum", "triangles", "cruise_control",
                                              "lti_second_order", "lorenz_x", "logistic_growth"};
  return names;
}

double cruise_hill(double t) {
  return (std::sin(2 * kPi * t) + 0.3 * std::sin(8 * kPi * t + 0.5) + 1.2 * std::sin(3.4 * kPi * t + 0.5)) / 100;
}

LinearGaussianModel cruise_control_model(double dt, const CruiseParams& p) {
  if (!(dt > 0.0)) throw ValidationError("dt must be > 0");
  LinearGaussianModel m;
  m.A = Mat::Zero(4, 4);
  m.A << 1, dt, dt * dt / 2, 0,
         0, 1, dt, 0,
         0, -p.fr - p.kp / dt, 0, p.ki / (dt * dt),
         0, -dt, 0, 1;
  m.B = Mat::Zero(4, 2);
  m.B(2, 0) = -p.mg;
  m.B(2, 1) = p.kp / dt;
  m.B(3, 1) = dt;
  m.C = Mat::Zero(1, 4);
  m.C(0, 0) = 1.0;
  const double a = 0.5 * dt * dt;
  Vec q(4);
  q << a * a, dt * dt, 1.0, a * a;
  m.Q = 1000.0 * dt * Mat(q.asDiagonal());
  m.R = Mat::Constant(1, 1, 0.1);
  m.x0 = Vec::Zero(4);
  m.P0 = 10.0 * Mat::Identity(4, 4);
  return m;
}

std::vector<Vec> cruise_control_inputs(const Grid& grid, const CruiseParams& p) {
  std::vector<Vec> u(grid.size(), Vec(2));
  for (std::size_t n = 0; n < grid.size(); ++n) {
    u[n](0) = cruise_hill(grid[n == 0 ? 0 : n - 1]);
    u[n](1) = p.vd;
  }
  return u;
}

std::vector<Vec> cruise_control_states(const Grid& grid, const CruiseParams& p) {
  const auto m = cruise_control_model(grid.dt(), p);
  const auto u = cruise_control_inputs(grid, p);
  std::vector<Vec> x(grid.size());
  x[0] = Vec::Zero(4);
  for (std::size_t n = 1; n < grid.size(); ++n) x[n] = m.A * x[n - 1] + m.B * u[n];
  return x;
}

Simulation simulate(const SimulationCase& c) {
  if (!(c.dt > 0.0) || !(c.T > 0.0)) throw ValidationError("simulation needs dt > 0 and T > 0");
  if (c.T / c.dt < 16.0) throw ValidationError("simulation needs T / dt >= 16");
  const auto n = std::size_t(std::llround(c.T / c.dt));
  Simulation s{Grid::uniform(0.0, c.dt, n), std::vector<double>(n), std::vector<double>(n)};
  const auto& t = s.grid.points();

  if (c.name == "sine_sum") {
    // Incommensurate frequencies, all below 3 Hz.
    const double f[3] = {0.7, 1.3 * std::numbers::sqrt2, std::numbers::e};
    const double a[3] = {1.0, 0.5, 0.25};
    const double ph[3] = {0.0, 0.4, 1.1};
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < 3; ++k) {
        const double w = 2 * kPi * f[k];
        s.x[i] += a[k] * std::sin(w * t[i] + ph[k]);
        s.xdot[i] += a[k] * w * std::cos(w * t[i] + ph[k]);
      }
  } else if (c.name == "triangles") {
    // Unit-amplitude triangle wave with period 1; the derivative at a corner
    // is the slope of the segment that starts there.
    for (std::size_t i = 0; i < n; ++i) {
      const double u = t[i] * 2.0;  // half periods
      const double seg = std::floor(u + 1e-9);
      const double frac = u - seg;
      const bool rising = std::fmod(seg, 2.0) == 0.0;
      s.x[i] = rising ? -1.0 + 2.0 * frac : 1.0 - 2.0 * frac;
      s.xdot[i] = rising ? 4.0 : -4.0;
    }
  } else if (c.name == "cruise_control") {
    const auto x = cruise_control_states(s.grid);
    for (std::size_t i = 0; i < n; ++i) {
      s.x[i] = x[i](0);
      s.xdot[i] = x[i](1);
    }
  } else if (c.name == "lti_second_order") {
    const double zeta = 0.2, wn = 2 * kPi, wd = wn * std::sqrt(1 - zeta * zeta);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = std::exp(-zeta * wn * t[i]);
      s.x[i] = 1.0 - e * (std::cos(wd * t[i]) + zeta / std::sqrt(1 - zeta * zeta) * std::sin(wd * t[i]));
      s.xdot[i] = wn / std::sqrt(1 - zeta * zeta) * e * std::sin(wd * t[i]);
    }
  } else if (c.name == "lorenz_x") {
    State3 st = lorenz_start();
    const double h = c.dt / 10;
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0)
        for (int k = 0; k < 10; ++k) st = rk4_step(st, h);
      s.x[i] = st[0] / 10;
      s.xdot[i] = lorenz_rhs(st)[0] / 10;
    }
  } else if (c.name == "logistic_growth") {
    const double r = 2.0, K = 1.0, t0 = 2.0;  // x(0) = 1 / (1 + e^4)
    for (std::size_t i = 0; i < n; ++i) {
      s.x[i] = K / (1.0 + std::exp(-r * (t[i] - t0)));
      s.xdot[i] = r * s.x[i] * (1.0 - s.x[i] / K);
    }
  } else {
    std::string known;
    for (const auto& k : case_names()) known += (known.empty() ? "" : ", ") + k;
    throw ValidationError("unknown simulation case '" + c.name + "'; known: " + known);
  }
  return s;
}

// --- noise ---

NoiseFamily parse_noise_family(const std::string& s) {
  if (s == "normal") return NoiseFamily::Normal;
  if (s == "laplace") return NoiseFamily::Laplace;
  if (s == "uniform") return NoiseFamily::Uniform;
  throw ValidationError("unknown noise family '" + s + "'; known: normal, laplace, uniform");
}

std::string to_string(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::Normal: return "normal";
    case NoiseFamily::Laplace: return "laplace";
    case NoiseFamily::Uniform: return "uniform";
  }
  return "?";
}

Signal add_noise(const Grid& grid, const std::vector<double>& x, const NoiseSpec& spec) {
  if (!(spec.scale >= 0.0)) throw ValidationError("noise scale must be >= 0");
  std::vector<double> y = x;
  if (spec.scale > 0.0) {
    KeyedStream rng = KeyedStream(spec.seed).substream("noise");
    for (auto& v : y) {
      switch (spec.family) {
        case NoiseFamily::Normal: v += 0.1 * spec.scale * rng.normal(); break;
        case NoiseFamily::Laplace: v += rng.laplace(0.1 * spec.scale); break;
        case NoiseFamily::Uniform: v += rng.uniform(-0.2 * spec.scale, 0.2 * spec.scale); break;
      }
    }
  }
  Signal s(grid, std::move(y));
  return spec.outliers ? add_outliers(s, spec.seed) : s;
}

Signal add_outliers(const Signal& y, std::uint64_t seed) {
  const std::size_t n = y.size();
  if (n < 100) throw ValidationError("outlier injection needs at least 100 samples");
  const std::size_t k = std::size_t(std::llround(0.01 * double(n)));
  const auto [mn, mx] = std::minmax_element(y.values().begin(), y.values().end());
  const double range = *mx - *mn;
  KeyedStream rng = KeyedStream(seed).substream("outliers");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  auto v = y.values();
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t r = j + std::size_t(rng.below(n - j));
    std::swap(idx[j], idx[r]);
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    v[idx[j]] += sign * rng.uniform(0.5, 1.5) * range;
  }
  return y.with_values(std::move(v));
}

// --- benchmark ---

SweepAxis parse_axis(const std::string& s) {
  if (s == "outliers") return SweepAxis::Outliers;
  if (s == "noise_type") return SweepAxis::NoiseType;
  if (s == "noise_scale") return SweepAxis::NoiseScale;
  if (s == "dt") return SweepAxis::Dt;
  if (s == "cutoff_f") return SweepAxis::CutoffF;
  throw ValidationError("unknown sweep axis '" + s + "'; known: outliers, noise_type, noise_scale, dt, cutoff_f");
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Outliers: return "outliers";
    case SweepAxis::NoiseType: return "noise_type";
    case SweepAxis::NoiseScale: return "noise_scale";
    case SweepAxis::Dt: return "dt";
    case SweepAxis::CutoffF: return "cutoff_f";
  }
  return "?";
}

bool SweepResult::rmse_increasing(const std::string& method, const std::string& case_name) const {
  std::vector<const SweepRow*> r;
  for (const auto& row : rows)
    if (row.method == method && row.case_name == case_name) r.push_back(&row);
  if (r.size() < 2) return false;
  for (std::size_t i = 1; i < r.size(); ++i)
    if (r[i]->n_ok == 0 || r[i - 1]->n_ok == 0 || !(r[i]->rmse_mean > r[i - 1]->rmse_mean)) return false;
  return true;
}

SweepResult benchmark_sweep(const SweepConfig& cfg) {
  if (cfg.methods.empty() || cfg.cases.empty() || cfg.values.empty())
    throw ValidationError("sweep needs at least one method, case and axis value");
  if (cfg.seeds < 1) throw ValidationError("sweep needs seeds >= 1");
  for (const auto& m : cfg.methods) find_method(m);
  for (const auto& c : cfg.cases)
    if (std::find(case_names().begin(), case_names().end(), c) == case_names().end())
      throw ValidationError("unknown simulation case '" + c + "'");

  struct Cell {
    std::size_t m, c, v;
    int rep;
  };
  std::vector<Cell> cells;
  for (std::size_t m = 0; m < cfg.methods.size(); ++m)
    for (std::size_t c = 0; c < cfg.cases.size(); ++c)
      for (std::size_t v = 0; v < cfg.values.size(); ++v)
        for (int r = 0; r < cfg.seeds; ++r) cells.push_back({m, c, v, r});

  // Truth per (case, dt), shared by all methods and replicates.
  std::map<std::pair<std::size_t, double>, Simulation> truth;
  for (std::size_t c = 0; c < cfg.cases.size(); ++c)
    for (std::size_t v = 0; v < cfg.values.size(); ++v) {
      const double dt = cfg.axis == SweepAxis::Dt ? cfg.values[v] : cfg.dt;
      if (!truth.count({c, dt})) truth.emplace(std::make_pair(c, dt), simulate({cfg.cases[c], cfg.T, dt}));
    }

  SweepResult res;
  res.cells.resize(cells.size());
  parallel_for(cells.size(), cfg.threads, [&](std::size_t i) {
    const Cell& cell = cells[i];
    CellResult& out = res.cells[i];
    out.method = cfg.methods[cell.m];
    out.case_name = cfg.cases[cell.c];
    out.axis_value = cfg.values[cell.v];
    out.replicate = cell.rep;
    try {
      double dt = cfg.dt, cutoff = cfg.cutoff_hz;
      NoiseSpec ns{cfg.noise, cfg.noise_scale, cfg.outliers, 0};
      const double a = out.axis_value;
      switch (cfg.axis) {
        case SweepAxis::Outliers: ns.outliers = a != 0.0; break;
        case SweepAxis::NoiseType: ns.family = static_cast<NoiseFamily>(int(std::lround(a))); break;
        case SweepAxis::NoiseScale: ns.scale = a; break;
        case SweepAxis::Dt: dt = a; break;
        case SweepAxis::CutoffF: cutoff = a; break;
      }
      ns.seed = stream_key(cfg.seed, out.case_name, out.method, a, std::uint64_t(cell.rep));
      const auto& sim = truth.at({cell.c, dt});
      const Signal y = add_noise(sim.grid, sim.x, ns);
      TuneSpec ts = TuneSpec::for_cutoff(cutoff, dt, ns.outliers, ns.seed);
      ts.starts = cfg.tune_starts;
      ts.max_evals = cfg.tune_max_evals;
      ts.threads = 1;
      const auto tuned = autotune(out.method, y, ts);
      const auto r = run_method(out.method, y, tuned.config.values());
      out.rmse = rmse(r.derivative, sim.xdot);
      out.error_correlation = error_correlation(r.derivative, sim.xdot);
      out.loss = tuned.loss;
      out.phi = r.phi;
      out.ok = std::isfinite(out.rmse);
      if (!out.ok) out.error = "non-finite RMSE";
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
    }
  });

  for (std::size_t m = 0; m < cfg.methods.size(); ++m)
    for (std::size_t c = 0; c < cfg.cases.size(); ++c)
      for (std::size_t v = 0; v < cfg.values.size(); ++v) {
        SweepRow row{cfg.methods[m], cfg.cases[c], cfg.values[v]};
        std::vector<double> rm, ec;
        for (std::size_t i = 0; i < cells.size(); ++i) {
          if (cells[i].m != m || cells[i].c != c || cells[i].v != v) continue;
          if (res.cells[i].ok) {
            rm.push_back(res.cells[i].rmse);
            ec.push_back(res.cells[i].error_correlation);
          } else {
            ++row.n_failed;
          }
        }
        row.n_ok = int(rm.size());
        auto stats = [](const std::vector<double>& v, double& mu, double& sd) {
          if (v.empty()) {
            mu = sd = NAN;
            return;
          }
          mu = mean(v);
          double s = 0.0;
          for (double x : v) s += (x - mu) * (x - mu);
          sd = v.size() > 1 ? std::sqrt(s / double(v.size() - 1)) : 0.0;
        };
        stats(rm, row.rmse_mean, row.rmse_std);
        stats(ec, row.ec_mean, row.ec_std);
        res.failures += std::size_t(row.n_failed);
        res.rows.push_back(row);
      }
  return res;
}

}  // namespace ndiff
