#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nlalign/core_model.hpp"
#include "nlalign/trajectory.hpp"

namespace nlalign {

enum class Scenario { S0, S1, S2, Sb, S3, S4, Boundary, OutOfRange };
enum class Conditionality { Unconditional, SemiUnconditional, Conditional, NoAlignmentGeneric, None };

std::string to_string(Scenario scenario);
std::string to_string(Conditionality conditionality);

struct ScenarioClass {
  Scenario label = Scenario::OutOfRange;
  /// Decay exponent of V (positive); +inf stands for exponential decay.
  std::optional<double> V_exponent;
  /// Growth exponent of D; 0 means D stays bounded.
  std::optional<double> D_exponent;
  /// Powers of log t multiplying t^-V_exponent and t^D_exponent (Sb only).
  std::optional<double> log_power_V;
  std::optional<double> log_power_D;
  Conditionality conditionality = Conditionality::None;
  std::string note;

  bool has_predictions() const { return V_exponent.has_value(); }
};

/// Total over p > 1, alpha >= 0; throws Error(Parameter) outside.
ScenarioClass classify_scenario(double p, double alpha);

std::string scenario_json(const ScenarioClass& sc, double p, double alpha);

enum class Field { D, V };

std::string to_string(Field field);
Field field_from_string(const std::string& name);

struct FitWindow {
  double lo = 0.0;
  double hi = 0.0;
};

struct RateFit {
  Field field = Field::V;
  /// V: decay exponent (reported positive). D: growth exponent.
  double exponent = 0.0;
  std::optional<double> log_power;
  double r_squared = 0.0;
  FitWindow window;
  std::size_t n_points = 0;
  double intercept = 0.0;
};

inline constexpr std::size_t kMinFitPoints = 8;

/// Last two decades of the run: [t_end/100, t_end].
FitWindow default_fit_window(const Trajectory& traj);

/// Least squares of log(field) against log(t) over the window.
RateFit fit_power(const Trajectory& traj, Field field, std::optional<FitWindow> window = std::nullopt);

/// Fits log(V t) (field V) or log D (field D) against log(log t); the slope
/// is the log power. Requires window.lo >= 100. The exponent field holds the
/// fixed t-power of the model (1 for V, 0 for D).
RateFit fit_log_corrected(const Trajectory& traj, Field field, std::optional<FitWindow> window = std::nullopt);

std::string rate_fit_json(const RateFit& fit);

/// psi(D) = int_{D0}^{D} phi(r) dr for the exact kernel.
double psi_kernel(const KernelSpec& kernel, double D0, double D);
/// psi(D) = int_{D0}^{D} r^-alpha dr.
double psi_power(double alpha, double D0, double D);

struct LyapunovSeries {
  std::vector<double> t;
  std::vector<double> E;
  bool monotone = true;
  double tolerance = 0.0;  // 1e-9 (1 + E(0)) per step
  std::optional<std::size_t> first_increase;
};

/// E = V^(3-p) + (3-p) lambdaC psi_power(D), 2 <= p < 3.
LyapunovSeries lyapunov_series(const Trajectory& traj, double p, double alpha, double lambdaC, double D0);
/// E = V^(3-p) + (3-p) C psi_kernel(D), 2 <= p < 3.
LyapunovSeries lyapunov_series_kernel(const Trajectory& traj, double p, const KernelSpec& kernel, double C, double D0);

}  // namespace nlalign
