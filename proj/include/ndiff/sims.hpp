#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ndiff/core.hpp"
#include "ndiff/kalman.hpp"

namespace ndiff {

/// sine_sum, triangles, cruise_control, lti_second_order, lorenz_x, logistic_growth.
const std::vector<std::string>& case_names();

struct SimulationCase {
  std::string name = "sine_sum";
  double T = 4.0;  // samples cover [0, T)
  double dt = 0.01;
};

struct Simulation {
  Grid grid;
  std::vector<double> x;
  std::vector<double> xdot;
};

Simulation simulate(const SimulationCase& c);

// --- cruise control ---

struct CruiseParams {
  double mg = 10000.0;
  double fr = 0.9;
  double ki = 0.05;
  double kp = 0.25;
  double vd = 0.5;
};

/// Hill slope input h(t).
double cruise_hill(double t);

/// Discrete PI cruise controller on hills: states [pos, vel, accel, cumulative
/// position error], inputs [hill slope, desired velocity], position measured.
/// Q, R and P0 are the guessed covariances used with it for filtering.
LinearGaussianModel cruise_control_model(double dt = 0.01, const CruiseParams& p = {});

/// u_n = [h(t_{n-1}), v_d], used in the step into sample n.
std::vector<Vec> cruise_control_inputs(const Grid& grid, const CruiseParams& p = {});

/// Noiseless state trajectory from x = 0.
std::vector<Vec> cruise_control_states(const Grid& grid, const CruiseParams& p = {});

// --- noise ---

enum class NoiseFamily { Normal, Laplace, Uniform };

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::Normal;
  double scale = 1.0;
  bool outliers = false;
  std::uint64_t seed = 0;
};

NoiseFamily parse_noise_family(const std::string& s);
std::string to_string(NoiseFamily f);

/// Adds iid normal(0, 0.1 s), laplace(0, 0.1 s) or uniform(-0.2 s, 0.2 s)
/// noise, then outliers if requested. Deterministic in spec.seed.
Signal add_noise(const Grid& grid, const std::vector<double>& x, const NoiseSpec& spec);

/// Shifts round(N / 100) distinct samples by +-U(0.5, 1.5) (max - min).
Signal add_outliers(const Signal& y, std::uint64_t seed);

// --- benchmark ---

enum class SweepAxis { Outliers, NoiseType, NoiseScale, Dt, CutoffF };

SweepAxis parse_axis(const std::string& s);
std::string to_string(SweepAxis a);

struct SweepConfig {
  std::vector<std::string> methods;
  std::vector<std::string> cases;
  SweepAxis axis = SweepAxis::NoiseScale;
  std::vector<double> values;
  int seeds = 5;
  std::uint64_t seed = 0;
  // Central point of the orthotope; the swept axis overrides one of these.
  double cutoff_hz = 3.0;
  double dt = 0.01;
  double T = 4.0;
  double noise_scale = 1.0;
  NoiseFamily noise = NoiseFamily::Normal;
  bool outliers = false;
  // Tuning budget per cell.
  int tune_starts = 3;
  int tune_max_evals = 60;
  unsigned threads = 0;
};

struct CellResult {
  std::string method, case_name;
  double axis_value = 0.0;
  int replicate = 0;
  bool ok = false;
  double rmse = 0.0;
  double error_correlation = 0.0;
  double loss = 0.0;
  Params phi;
  std::string error;
};

struct SweepRow {
  std::string method, case_name;
  double axis_value = 0.0;
  int n_ok = 0, n_failed = 0;
  double rmse_mean = 0.0, rmse_std = 0.0;
  double ec_mean = 0.0, ec_std = 0.0;
};

struct SweepResult {
  std::vector<CellResult> cells;  // ordered by (method, case, value, replicate)
  std::vector<SweepRow> rows;     // ordered by (method, case, value)
  std::size_t failures = 0;

  /// Mean RMSE strictly increasing along the axis for (method, case).
  bool rmse_increasing(const std::string& method, const std::string& case_name) const;
};

SweepResult benchmark_sweep(const SweepConfig& config);

}  // namespace ndiff
