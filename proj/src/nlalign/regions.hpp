#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlalign/trajectory.hpp"

namespace nlalign {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Coordinates a region is stated in.
///   Raw:     (t, D, V)
///   S1:      (tau, (t+1)^(b-1) D, (t+1)^b V), b = beta^*
///   DScaled: (t, (t+1)^-g D, V)
///   VScaled: (t, D, (t+1)^g V)
///   Sb:      (tau, (tau+1)^-(g+1) D, (tau+1)^-g (t+1) V), g = alpha/(1-alpha)
enum class RegionCoords { Raw, S1, DScaled, VScaled, Sb };

std::string to_string(RegionCoords coords);

/// Maps a raw sample to region coordinates:
///   D -> D (t+1)^D_t (log(t+1)+1)^D_log, same for V, and t -> log(t+1)
///   when log_time is set.
struct Scaling {
  double D_t = 0.0;
  double D_log = 0.0;
  double V_t = 0.0;
  double V_log = 0.0;
  bool log_time = false;
};

struct Interval {
  double lo = 0.0;
  double hi = kInf;
};

struct RegionSpec {
  Interval D;
  Interval V;
  RegionCoords coords = RegionCoords::Raw;
  Scaling scaling;
  std::string provenance;
  std::vector<std::pair<std::string, double>> constants;

  void validate() const;
  std::optional<double> constant(const std::string& name) const;
};

// ---- region and threshold constructors --------------------------------

/// Invariant box for the S1 system; M is reported as constant "M".
RegionSpec region_A_S1(double D0, double V0, double p, double alpha, double lambdaC);

/// Lower invariant region [m/(1-b), inf) x [m, inf) for the S1 system; "m".
RegionSpec region_B_S1_lower(double x0, double v0, double p, double alpha, double LambdaC);

/// Uniform bound on the raw D for 2 <= p < 3 and alpha < 1.
double flocking_bound_fat_tail(double D0, double V0, double p, double alpha, double lambdaC);

struct Scenario2Box {
  bool feasible = false;
  double D_bar = 0.0;
  double V_bar = 0.0;  // bound on (t+1)^beta V
};

Scenario2Box scenario2_box(double D0, double V0, double p, double alpha, double lambdaC, double beta);

/// Box [0, D_bar] x [0, V_bar] in VScaled coordinates with exponent beta.
RegionSpec scenario2_region(const Scenario2Box& box, double beta);

struct SubcriticalResult {
  bool member = false;
  std::optional<double> witness_beta;
};

/// Ascending Chebyshev grid on (1+eps, b-eps), b = 1/(p-2), eps = 1e-6 (b-1).
std::vector<double> subcritical_beta_grid(double p, std::size_t points = 512);

/// log of the right side of the subcritical condition at beta; the condition
/// reads log D0 + e(beta) log V0 <= subcritical_log_threshold(beta).
double subcritical_log_threshold(double p, double alpha, double lambdaC, double beta);
/// e(beta) = (1 - beta (p-2))/(alpha beta - 1).
double subcritical_v_exponent(double p, double alpha, double beta);

SubcriticalResult subcritical_membership(double D0, double V0, double p, double alpha, double lambdaC);

double d0_star(double p, double alpha, double lambdaC);

/// v0 threshold of the supercritical region.
double supercritical_v_threshold(double p, double alpha, double LambdaC);
bool supercritical_membership(double x0, double v0, double p, double alpha, double LambdaC);

struct FloorPair {
  double D_floor = 0.0;  // D(t) >= D_floor (t+1)
  double V_floor = 0.0;  // V(t) >= V_floor
};

/// Floors for 2 < p < 3, alpha > 1; std::nullopt when (x0, v0) is not supercritical.
std::optional<FloorPair> no_alignment_floor_23(double x0, double v0, double p, double alpha, double LambdaC);

struct NoAlignmentFloor {
  double gamma = 0.0;
  double root = 0.0;          // unique root of the floor function
  double D_floor = 0.0;       // min{root, x0}: (t+1)^-gamma D(t) >= D_floor
  double V_floor = 0.0;       // V(t) >= V_floor
  double linear_floor = 0.0;  // min{x0, V_floor}: D(t) >= linear_floor (t+1)
};

/// Admissible gamma interval (1/alpha, min{1, (p-2)/alpha}).
std::pair<double, double> no_alignment_gamma_range(double p, double alpha);
double default_no_alignment_gamma(double p, double alpha);

/// f(D) = v0^-q D^alpha - x0^((1-g) q/g) D^(alpha - q/g) + q LambdaC/(g alpha - 1), q = p-2.
double no_alignment_f(double D, double x0, double v0, double p, double alpha, double LambdaC, double gamma);

/// Floors for p > 3, alpha > 1 (every x0, v0 > 0).
NoAlignmentFloor no_alignment_floor(double x0, double v0, double p, double alpha, double LambdaC,
                                    double gamma);

/// [D_floor, inf) x [V_floor, inf) in DScaled coordinates with exponent 1.
RegionSpec floor_region(const FloorPair& floors);
/// [D_floor, inf) x [V_floor, inf) with D scaled by (t+1)^-gamma.
RegionSpec floor_region(const NoAlignmentFloor& floors);

// ---- containment -------------------------------------------------------

enum class Side { Left, Right, Bottom, Top };

std::string to_string(Side side);

struct Exit {
  double t = 0.0;  // time in the region's time coordinate
  Side side = Side::Left;
  double D = 0.0;  // offending sample in region coordinates
  double V = 0.0;
};

struct ContainmentReport {
  bool contained = true;
  std::optional<Exit> first_exit;
  std::size_t samples_checked = 0;
};

/// Violations within 10 (atol + rtol |bound|) of a boundary count as grazing.
/// Raw trajectories are converted through region.scaling; otherwise the
/// trajectory must already be in the region's coordinates.
ContainmentReport check_containment(const Trajectory& traj, const RegionSpec& region);

/// JSON text {provenance, coords, D_interval, V_interval, constants}; an
/// infinite upper end is written as null.
std::string region_json(const RegionSpec& region);

}  // namespace nlalign
