#include "ndiff/tune.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>

#include "ndiff/methods.hpp"
#include "ndiff/parallel.hpp"
#include "ndiff/rng.hpp"

namespace ndiff {

namespace {

void same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ValidationError("length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  if (a.empty()) throw ValidationError("empty input");
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double rmse(std::span<const double> est, std::span<const double> truth) {
  same_length(est, truth);
  double s = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) s += (est[i] - truth[i]) * (est[i] - truth[i]);
  return std::sqrt(s / double(est.size()));
}

double error_correlation(std::span<const double> est, std::span<const double> truth) {
  same_length(est, truth);
  const std::size_t n = est.size();
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = est[i] - truth[i];
  const double me = mean(e), mt = mean(truth);
  double see = 0.0, stt = 0.0, set = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = e[i] - me, b = truth[i] - mt;
    see += a * a;
    stt += b * b;
    set += a * b;
  }
  if (!(stt > 0.0)) throw ValidationError("error correlation needs a truth series with nonzero variance");
  // An error that is constant up to rounding counts as zero variance.
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max({scale, std::fabs(est[i]), std::fabs(truth[i])});
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * scale;
  if (!(see > double(n) * floor * floor)) return 0.0;
  return std::clamp(set * set / (see * stt), 0.0, 1.0);
}

double gamma_heuristic(double f_hz, double dt) {
  if (!(f_hz > 0.0) || !(dt > 0.0)) throw ValidationError("gamma heuristic needs f > 0 and dt > 0");
  return std::exp(-1.6 * std::log(f_hz) - 0.71 * std::log(dt) - 5.1);
}

double huber(double x, double m) {
  const double a = std::fabs(x);
  return a <= m ? 0.5 * x * x : m * a - 0.5 * m * m;
}

double sigma_mad(std::span<const double> v) {
  if (v.empty()) throw ValidationError("empty input");
  const double med = median(v);
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = std::fabs(v[i] - med);
  return median(dev) / 0.6745;
}

double proxy_loss(std::span<const double> derivative, const Signal& signal, double gamma) {
  same_length(derivative, signal.values());
  const auto integ = cumtrapz(signal.t(), derivative);
  const auto& y = signal.values();
  const std::size_t n = y.size();
  double mu = 0.0;
  for (std::size_t i = 0; i < n; ++i) mu += y[i] - integ[i];
  mu /= double(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (integ[i] + mu - y[i]) * (integ[i] + mu - y[i]);
  return std::sqrt(s / double(n)) + gamma * total_variation(derivative);
}

double robust_proxy_loss(std::span<const double> derivative, const Signal& signal, double gamma, double m) {
  same_length(derivative, signal.values());
  if (!(m > 0.0)) throw ValidationError("Huber M must be > 0");
  const auto integ = cumtrapz(signal.t(), derivative);
  const auto& y = signal.values();
  const std::size_t n = y.size();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = integ[i] - y[i];
  const double k = m * sigma_mad(r);
  if (!(k > 0.0) || !std::isfinite(k)) return proxy_loss(derivative, signal, gamma);

  // Robust location: root of the monotone influence sum sum clip(r + c, -k, k).
  auto influence = [&](double c) {
    double s = 0.0;
    for (double v : r) s += std::clamp(v + c, -k, k);
    return s;
  };
  const auto [rmin, rmax] = std::minmax_element(r.begin(), r.end());
  double lo = -*rmax - k, hi = -*rmin + k;
  for (int it = 0; it < 200 && hi - lo > 1e-10 * (1.0 + std::fabs(lo) + std::fabs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (influence(mid) < 0.0 ? lo : hi) = mid;
  }
  double c = 0.5 * (lo + hi);
  // Closed form on the active set, kept if the set does not change.
  {
    double sum_in = 0.0, clip = 0.0;
    std::size_t inside = 0;
    for (double v : r) {
      const double a = v + c;
      if (a > k) clip += k;
      else if (a < -k) clip -= k;
      else {
        sum_in += v;
        ++inside;
      }
    }
    if (inside > 0) {
      const double cp = -(sum_in + clip) / double(inside);
      bool same = true;
      for (double v : r) {
        const int s0 = v + c > k ? 1 : (v + c < -k ? -1 : 0);
        const int s1 = v + cp > k ? 1 : (v + cp < -k ? -1 : 0);
        if (s0 != s1) {
          same = false;
          break;
        }
      }
      if (same) c = cp;
    }
  }
  double s = 0.0;
  for (double v : r) s += huber(v + c, k);
  return std::sqrt(2.0 / double(n) * s) + gamma * total_variation(derivative);
}

TuneSpec TuneSpec::for_cutoff(double f_hz, double dt, bool outliers, std::uint64_t seed) {
  TuneSpec s;
  s.gamma = gamma_heuristic(f_hz, dt);
  s.huber_m = outliers ? 2.0 : 6.0;
  s.seed = seed;
  return s;
}

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                             const std::vector<double>& step, int max_evals, double xtol) {
  const std::size_t d = x0.size();
  if (step.size() != d) throw ValidationError("step size mismatch");
  std::vector<std::vector<double>> v(d + 1, x0);
  std::vector<double> fv(d + 1);
  int evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    const double y = f(x);
    return std::isnan(y) ? kInf : y;
  };
  for (std::size_t i = 0; i < d; ++i) v[i + 1][i] += step[i];
  for (std::size_t i = 0; i <= d; ++i) fv[i] = eval(v[i]);

  std::vector<std::size_t> order(d + 1);
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    {
      std::vector<std::vector<double>> nv;
      std::vector<double> nf;
      for (std::size_t i : order) {
        nv.push_back(v[i]);
        nf.push_back(fv[i]);
      }
      v = std::move(nv);
      fv = std::move(nf);
    }
    double diam = 0.0;
    for (std::size_t i = 1; i <= d; ++i)
      for (std::size_t j = 0; j < d; ++j) diam = std::max(diam, std::fabs(v[i][j] - v[0][j]));
    if (diam < xtol) break;

    std::vector<double> c(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) c[j] += v[i][j] / double(d);
    auto along = [&](double t) {
      std::vector<double> x(d);
      for (std::size_t j = 0; j < d; ++j) x[j] = c[j] + t * (v[d][j] - c[j]);
      return x;
    };
    const auto xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < fv[0]) {
      const auto xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        v[d] = xe;
        fv[d] = fe;
      } else {
        v[d] = xr;
        fv[d] = fr;
      }
      continue;
    }
    if (fr < fv[d - 1]) {
      v[d] = xr;
      fv[d] = fr;
      continue;
    }
    const bool outside = fr < fv[d];
    const auto xc = along(outside ? -0.5 : 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[d])) {
      v[d] = xc;
      fv[d] = fc;
      continue;
    }
    for (std::size_t i = 1; i <= d; ++i) {
      for (std::size_t j = 0; j < d; ++j) v[i][j] = v[0][j] + 0.5 * (v[i][j] - v[0][j]);
      fv[i] = eval(v[i]);
    }
  }
  const auto best = std::min_element(fv.begin(), fv.end()) - fv.begin();
  return {v[std::size_t(best)], fv[std::size_t(best)], evals};
}

namespace {

double to_u(double v, Scale s) { return s == Scale::Log ? std::log(v) : v; }

double from_u(double u, const ParamSpec& p) {
  const double lo = to_u(p.lo, p.scale), hi = to_u(p.hi, p.scale);
  u = std::clamp(u, lo, hi);
  double v = p.scale == Scale::Log ? std::exp(u) : u;
  if (p.scale == Scale::Integer) v = std::round(v);
  return std::clamp(v, p.lo, p.hi);
}

struct StartOutcome {
  std::vector<double> values;
  double loss = kInf;
  int evaluations = 0;
  std::set<std::string> failures;
};

}  // namespace

TuneResult autotune(const std::string& method, const Signal& signal, const TuneSpec& spec) {
  if (!(spec.gamma > 0.0)) throw ValidationError("tuning gamma must be > 0");
  if (!(spec.huber_m > 0.0)) throw ValidationError("tuning Huber M must be > 0");
  if (spec.starts < 1) throw ValidationError("tuning needs at least one start");
  if (spec.max_evals < 1) throw ValidationError("tuning needs max_evals >= 1");
  MethodConfig base = default_config(method, signal);
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < base.params.size(); ++i)
    if (base.params[i].tunable && base.params[i].hi > base.params[i].lo) free.push_back(i);

  auto loss_of = [&](const std::vector<double>& vals, std::set<std::string>& failures) {
    MethodConfig c = base;
    for (std::size_t k = 0; k < free.size(); ++k) c.params[free[k]].value = vals[k];
    try {
      const auto r = run_method(c.method, signal, c.values());
      const double l = robust_proxy_loss(r.derivative, signal, spec.gamma, spec.huber_m);
      return std::isfinite(l) ? l : kInf;
    } catch (const Error& e) {
      failures.insert(e.what());
      return kInf;
    }
  };

  const std::size_t starts = std::size_t(spec.starts);
  std::vector<StartOutcome> out(starts);
  parallel_for(starts, spec.threads, [&](std::size_t s) {
    StartOutcome& o = out[s];
    std::map<std::vector<double>, double> memo;
    auto decode = [&](const std::vector<double>& u) {
      std::vector<double> vals(free.size());
      for (std::size_t k = 0; k < free.size(); ++k) vals[k] = from_u(u[k], base.params[free[k]]);
      return vals;
    };
    auto objective = [&](const std::vector<double>& u) {
      const auto vals = decode(u);
      auto it = memo.find(vals);
      if (it != memo.end()) return it->second;
      const double l = loss_of(vals, o.failures);
      memo.emplace(vals, l);
      return l;
    };
    std::vector<double> u0(free.size()), step(free.size());
    KeyedStream rng(stream_key(spec.seed, "autotune", method, 0.0, s));
    for (std::size_t k = 0; k < free.size(); ++k) {
      const auto& p = base.params[free[k]];
      const double lo = to_u(p.lo, p.scale), hi = to_u(p.hi, p.scale);
      // Start 0 is the registry default; the rest are drawn over the bounds.
      u0[k] = s == 0 ? to_u(p.value, p.scale) : rng.uniform(lo, hi);
      double st = 0.1 * (hi - lo);
      if (p.scale == Scale::Integer) st = std::max(st, 1.0);
      step[k] = u0[k] + st <= hi ? st : -st;
    }
    if (free.empty()) {
      o.loss = objective(u0);
      o.evaluations = 1;
      return;
    }
    const auto nm = nelder_mead(objective, u0, step, spec.max_evals);
    o.values = decode(nm.x);
    o.loss = nm.f;
    o.evaluations = nm.evaluations;
  });

  TuneResult res;
  std::size_t best = starts;
  std::set<std::string> failures;
  for (std::size_t s = 0; s < starts; ++s) {
    res.evaluations += out[s].evaluations;
    failures.insert(out[s].failures.begin(), out[s].failures.end());
    if (out[s].loss < kInf && (best == starts || out[s].loss < out[best].loss)) best = s;
  }
  res.failures.assign(failures.begin(), failures.end());
  if (best == starts) {
    std::string msg = "autotune(" + method + "): no start produced a finite loss";
    for (const auto& f : res.failures) msg += "; " + f;
    throw NumericError(msg);
  }
  res.config = base;
  for (std::size_t k = 0; k < free.size(); ++k) res.config.params[free[k]].value = out[best].values[k];
  res.loss = out[best].loss;
  return res;
}

}  // namespace ndiff
