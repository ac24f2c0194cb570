#include "ndiff/methods.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ndiff/fd.hpp"
#include "ndiff/kalman.hpp"
#include "ndiff/smoothers.hpp"
#include "ndiff/spectral.hpp"
#include "ndiff/tvr.hpp"

namespace ndiff {

namespace {

ParamSpec P(std::string name, double value, double lo, double hi, Scale scale, bool tunable = true) {
  return ParamSpec{std::move(name), value, lo, hi, scale, tunable};
}

ParamSpec fixed_int(std::string name, double value, double lo, double hi) {
  return P(std::move(name), value, lo, hi, Scale::Integer, false);
}

struct Dims {
  double dt, T;
  double n;
};

Dims dims(const Signal& s) {
  return {s.grid().mean_dt(), s.t().back() - s.t().front(), double(s.size())};
}

int as_int(const Params& p, const char* k) { return int(std::lround(p.at(k))); }
int odd_up(int w) { return w % 2 == 0 ? w + 1 : w; }

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

// gamma = N dt^nu kappa, with the per-sample weight kappa spanning a wide
// range around the scale at which fidelity and the TV term balance.
std::pair<double, double> tvr_gamma_bounds(const Dims& d, int nu) {
  const double base = d.n * std::pow(d.dt, nu) / std::pow(d.dt, nu + 1);
  return {1e-10 * base, 1e2 * base};
}

std::vector<MethodInfo> build() {
  std::vector<MethodInfo> m;

  m.push_back({"fd", "finite differences (no smoothing)",
               [](const Signal&) {
                 return std::vector<ParamSpec>{fixed_int("nu", 1, 1, 4), fixed_int("order", 2, 2, 8)};
               },
               [](const Signal& s, const Params& p) { return fd_derivative(s, as_int(p, "nu"), as_int(p, "order")); }});

  m.push_back({"iterfd", "iterated finite differences with re-integration",
               [](const Signal& s) {
                 const double hi = std::max(1.0, std::min(200.0, double(s.size()) / 2));
                 return std::vector<ParamSpec>{fixed_int("order", 2, 2, 8),
                                               P("iterations", std::min(5.0, hi), 1, hi, Scale::Integer)};
               },
               [](const Signal& s, const Params& p) {
                 return iterated_fd(s, as_int(p, "order"), as_int(p, "iterations"));
               }});

  m.push_back({"fourier", "periodic spectral derivative with an ideal low-pass",
               [](const Signal& s) {
                 const double h = std::max(1.0, std::floor(double(s.size()) / 2));
                 return std::vector<ParamSpec>{fixed_int("nu", 1, 1, 4),
                                               P("keep_modes", h, 1, h, Scale::Integer)};
               },
               [](const Signal& s, const Params& p) {
                 return fourier_derivative(s, as_int(p, "nu"), as_int(p, "keep_modes"));
               }});

  m.push_back({"chebyshev", "Chebyshev collocation on Chebyshev-Lobatto samples",
               [](const Signal&) { return std::vector<ParamSpec>{fixed_int("nu", 1, 1, 4)}; },
               [](const Signal& s, const Params& p) { return chebyshev_derivative(s, as_int(p, "nu")); }});

  m.push_back({"spectral", "Fourier derivative on a padded, optionally mirrored extension",
               [](const Signal& s) {
                 const double n = double(s.size());
                 return std::vector<ParamSpec>{P("pad", std::floor(n / 4), 0, n, Scale::Integer),
                                               fixed_int("even", 1, 0, 1),
                                               P("keep_fraction", 0.2, 0.005, 1.0, Scale::Log),
                                               fixed_int("nu", 1, 1, 4)};
               },
               [](const Signal& s, const Params& p) {
                 const int pad = as_int(p, "pad");
                 const bool even = as_int(p, "even") != 0;
                 const double len = double(s.size() + 2 * std::size_t(std::max(pad, 0))) * (even ? 2.0 : 1.0);
                 const int keep = std::max(1, int(std::lround(p.at("keep_fraction") * std::floor(len / 2))));
                 auto r = fourier_extension_derivative(s, pad, even ? Extension::Even : Extension::None, keep,
                                                       as_int(p, "nu"));
                 r.phi["keep_fraction"] = p.at("keep_fraction");
                 return r;
               }});

  auto kernel_method = [&](const char* name, KernelKind kind, bool with_sigma) {
    m.push_back({name, "kernel smoothing followed by finite differences",
                 [with_sigma](const Signal& s) {
                   const double hi = std::max(3.0, std::floor(double(s.size()) / 4));
                   std::vector<ParamSpec> v{P("window", std::min(11.0, hi), 3, hi, Scale::Integer)};
                   if (with_sigma) v.push_back(P("sigma", 2.0, 0.3, std::max(0.6, hi / 2), Scale::Log));
                   return v;
                 },
                 [kind, with_sigma](const Signal& s, const Params& p) {
                   KernelSpec k{kind, odd_up(as_int(p, "window")), with_sigma ? p.at("sigma") : 1.0};
                   return kerneldiff(s, k);
                 }});
  };
  kernel_method("meandiff", KernelKind::Mean, false);
  kernel_method("gaussiandiff", KernelKind::Gaussian, true);
  kernel_method("friedrichsdiff", KernelKind::Friedrichs, false);
  kernel_method("mediandiff", KernelKind::Median, false);

  m.push_back({"butterdiff", "zero-phase Butterworth low-pass, then finite differences",
               [](const Signal& s) {
                 const auto d = dims(s);
                 const double lo = 0.5 / d.T, hi = 0.45 / d.dt;
                 return std::vector<ParamSpec>{P("order", 2, 1, 8, Scale::Integer),
                                               P("cutoff", clampd(std::sqrt(lo * hi), lo, hi), lo, hi, Scale::Log)};
               },
               [](const Signal& s, const Params& p) { return butterdiff(s, as_int(p, "order"), p.at("cutoff")); }});

  m.push_back({"polydiff", "sliding polynomial fits, averaged where windows overlap",
               [](const Signal& s) {
                 const double hi = std::max(4.0, std::floor(double(s.size()) / 2));
                 return std::vector<ParamSpec>{P("window", std::min(21.0, hi), 4, hi, Scale::Integer),
                                               fixed_int("stride", 1, 1, hi),
                                               P("degree", 2, 1, 3, Scale::Integer)};
               },
               [](const Signal& s, const Params& p) {
                 const int deg = as_int(p, "degree");
                 const int win = std::max(as_int(p, "window"), deg + 2);
                 return polydiff(s, win, as_int(p, "stride"), deg);
               }});

  m.push_back({"savgoldiff", "Savitzky-Golay smoothing and derivative (even windows round up)",
               [](const Signal& s) {
                 const double hi = std::max(5.0, std::floor(double(s.size()) / 2));
                 return std::vector<ParamSpec>{P("window", std::min(21.0, hi), 5, hi, Scale::Integer),
                                               P("degree", 3, 1, 5, Scale::Integer),
                                               P("sigma", 0.0, 0.0, 50.0, Scale::Linear, false)};
               },
               [](const Signal& s, const Params& p) {
                 const int deg = as_int(p, "degree");
                 const int win = odd_up(std::max(as_int(p, "window"), deg + 1));
                 const double sg = p.at("sigma");
                 return savgoldiff(s, win, deg, sg > 0.0 ? std::optional<double>(sg) : std::nullopt);
               }});

  m.push_back({"splinediff", "penalized smoothing spline with knots at the samples",
               [](const Signal&) {
                 return std::vector<ParamSpec>{fixed_int("degree", 3, 1, 5),
                                               P("lambda", 1e-4, 1e-14, 1e4, Scale::Log),
                                               fixed_int("iterations", 1, 1, 10)};
               },
               [](const Signal& s, const Params& p) {
                 SplineSpec sp;
                 sp.degree = as_int(p, "degree");
                 sp.lambda = p.at("lambda");
                 sp.iterations = as_int(p, "iterations");
                 return splinediff(s, sp);
               }});

  m.push_back({"splinebound", "least-squares spline refined until a residual bound holds",
               [](const Signal& s) {
                 const double n = double(s.size());
                 return std::vector<ParamSpec>{fixed_int("degree", 3, 1, 5),
                                               P("s", 0.01 * n, 1e-8 * n, 10.0 * n, Scale::Log)};
               },
               [](const Signal& s, const Params& p) {
                 SplineSpec sp;
                 sp.degree = as_int(p, "degree");
                 sp.mode = SplineMode::Bound;
                 sp.s = p.at("s");
                 return splinediff(s, sp);
               }});

  m.push_back({"rbfdiff", "truncated Gaussian radial basis fit with damping",
               [](const Signal& s) {
                 const auto d = dims(s);
                 const double lo = d.dt, hi = std::max(2.0 * d.dt, d.T / 4);
                 return std::vector<ParamSpec>{P("sigma", clampd(5.0 * d.dt, lo, hi), lo, hi, Scale::Log),
                                               P("truncation", 4.0, 1.5, 10.0, Scale::Linear, false),
                                               P("damping", 0.1, 1e-8, 1e2, Scale::Log)};
               },
               [](const Signal& s, const Params& p) {
                 return rbfdiff(s, p.at("sigma"), p.at("truncation") * p.at("sigma"), p.at("damping"));
               }});

  auto tvr_schema = [](int nu) {
    return [nu](const Signal& s) {
      const auto d = dims(s);
      const auto [lo, hi] = tvr_gamma_bounds(d, nu);
      return std::vector<ParamSpec>{fixed_int("nu", nu, 1, 3),
                                    P("gamma", std::sqrt(lo * hi) * 1e-2, lo, hi, Scale::Log),
                                    P("tol", 1e-6, 1e-12, 1e-2, Scale::Log, false),
                                    fixed_int("max_iter", 20000, 1, 1e7)};
    };
  };
  m.push_back({"tvrdiff", "total-variation regularized smoothing of the nu-th derivative", tvr_schema(1),
               [](const Signal& s, const Params& p) {
                 TvrSpec t;
                 t.nu = as_int(p, "nu");
                 t.gamma = p.at("gamma");
                 t.tol = p.at("tol");
                 t.max_iter = as_int(p, "max_iter");
                 return tvrdiff(s, t);
               }});

  m.push_back({"smooth_accel_tvr", "second-order TVR with Gaussian-softened derivative",
               [tvr_schema](const Signal& s) {
                 auto v = tvr_schema(2)(s);
                 v[0].hi = v[0].lo = 2;
                 v.push_back(P("soften_sigma", 3.0, 0.5, 20.0, Scale::Log));
                 return v;
               },
               [](const Signal& s, const Params& p) {
                 TvrSpec t;
                 t.nu = as_int(p, "nu");
                 t.gamma = p.at("gamma");
                 t.tol = p.at("tol");
                 t.max_iter = as_int(p, "max_iter");
                 t.soften_sigma = p.at("soften_sigma");
                 return smooth_accel_tvr(s, t);
               }});

  m.push_back({"rtsdiff", "constant-derivative Kalman filter with RTS smoothing",
               [](const Signal&) {
                 return std::vector<ParamSpec>{fixed_int("nu", 2, 1, 3), P("q", 1e4, 1e-4, 1e12, Scale::Log),
                                               P("r", 1e-2, 1e-10, 1e4, Scale::Log, false)};
               },
               [](const Signal& s, const Params& p) { return rtsdiff(s, as_int(p, "nu"), p.at("q"), p.at("r")); }});

  m.push_back({"robustdiff", "constant-derivative MAP smoothing with a Huber measurement loss",
               [](const Signal&) {
                 return std::vector<ParamSpec>{fixed_int("nu", 2, 1, 3), P("q", 1e4, 1e-4, 1e12, Scale::Log),
                                               P("r", 1e-2, 1e-10, 1e4, Scale::Log),
                                               P("m", 2.0, 0.1, 100.0, Scale::Log, false)};
               },
               [](const Signal& s, const Params& p) {
                 RobustSpec rs;
                 rs.measurement_loss = Loss::huber(p.at("m"));
                 auto r = robustdiff(s, as_int(p, "nu"), p.at("q"), p.at("r"), rs);
                 r.phi["m"] = p.at("m");
                 return r;
               }});
  return m;
}

std::string names_of(const std::vector<MethodInfo>& m) {
  std::string s;
  for (const auto& i : m) s += (s.empty() ? "" : ", ") + i.name;
  return s;
}

}  // namespace

const std::vector<MethodInfo>& method_registry() {
  static const std::vector<MethodInfo> reg = build();
  return reg;
}

const MethodInfo& find_method(std::string_view name) {
  for (const auto& m : method_registry())
    if (m.name == name) return m;
  // Short names: savgol for savgoldiff and so on.
  for (const auto& m : method_registry())
    if (m.name.size() == name.size() + 4 && m.name.starts_with(name) && m.name.ends_with("diff")) return m;
  throw UnknownNameError("unknown method '" + std::string(name) + "'; known: " + names_of(method_registry()));
}

MethodConfig default_config(const std::string& method, const Signal& signal) {
  const auto& info = find_method(method);
  return MethodConfig{info.name, info.schema(signal)};
}

DerivativeResult run_method(const std::string& method, const Signal& signal, const Params& params) {
  const auto& info = find_method(method);
  auto schema = info.schema(signal);
  Params full;
  for (const auto& p : schema) full[p.name] = p.value;
  for (const auto& [k, v] : params) {
    auto it = std::find_if(schema.begin(), schema.end(), [&](const ParamSpec& s) { return s.name == k; });
    if (it == schema.end())
      throw UnknownNameError("method '" + method + "' has no parameter '" + k + "'; accepted:\n" +
                             describe_schema(method, signal));
    if (!std::isfinite(v)) throw ValidationError("parameter '" + k + "' must be finite");
    if (it->scale == Scale::Integer && v != std::round(v))
      throw ValidationError("parameter '" + k + "' must be an integer");
    full[k] = v;
  }
  auto r = info.run(signal, full);
  r.method = info.name;
  for (const auto& [k, v] : full)
    if (!r.phi.count(k)) r.phi[k] = v;
  return r;
}

std::string describe_schema(const std::string& method, const Signal& signal) {
  const auto& info = find_method(method);
  std::ostringstream os;
  os << info.name << ": " << info.summary << "\n";
  for (const auto& p : info.schema(signal)) {
    os << "  " << p.name << " = " << p.value << "  [" << p.lo << ", " << p.hi << "] "
       << (p.scale == Scale::Log ? "log" : p.scale == Scale::Integer ? "integer" : "linear")
       << (p.tunable ? "" : ", fixed during tuning") << "\n";
  }
  return os.str();
}

}  // namespace ndiff
