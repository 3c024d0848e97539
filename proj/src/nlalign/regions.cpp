#include "nlalign/regions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/tools/roots.hpp>
#include <json.hpp>

#include "nlalign/error.hpp"

namespace nlalign {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::Parameter, std::string(name) + " must be a positive finite number");
  }
}

void require_nonnegative(double value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::Parameter, std::string(name) + " must be a nonnegative finite number");
  }
}

double beta_sup(double p, double alpha) { return (1.0 - alpha) / (p - 2.0 - alpha); }

void require_S1(double p, double alpha) {
  if (!(p > 3.0) || !(alpha >= 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::WrongScenario, "needs p > 3 and 0 <= alpha < 1");
  }
}

void require_23_thin(double p, double alpha) {
  if (!(p > 2.0 && p < 3.0) || !(alpha > 1.0)) {
    throw Error(ErrorCode::WrongScenario, "needs 2 < p < 3 and alpha > 1");
  }
}

Scaling s1_scaling(double b) { return {b - 1.0, 0.0, b, 0.0, true}; }

}  // namespace

std::string to_string(RegionCoords coords) {
  switch (coords) {
    case RegionCoords::Raw: return "raw";
    case RegionCoords::S1: return "S1";
    case RegionCoords::DScaled: return "D-scaled";
    case RegionCoords::VScaled: return "V-scaled";
    case RegionCoords::Sb: return "Sb";
  }
  return "?";
}

void RegionSpec::validate() const {
  for (const Interval* iv : {&D, &V}) {
    if (!(iv->lo >= 0.0) || !(iv->hi >= iv->lo)) {
      throw Error(ErrorCode::Parameter, "region intervals need 0 <= lo <= hi");
    }
  }
}

std::optional<double> RegionSpec::constant(const std::string& name) const {
  for (const auto& [key, value] : constants) {
    if (key == name) return value;
  }
  return std::nullopt;
}

RegionSpec region_A_S1(double D0, double V0, double p, double alpha, double lambdaC) {
  require_S1(p, alpha);
  require_nonnegative(D0, "D0");
  require_nonnegative(V0, "V0");
  require_positive(lambdaC, "lambdaC");
  const double b = beta_sup(p, alpha);
  const double floor = std::pow(b / (lambdaC * std::pow(1.0 - b, alpha)), 1.0 / (p - 2.0 - alpha));
  const double M = std::max({V0, (1.0 - b) * D0, floor});
  RegionSpec r;
  r.D = {0.0, M / (1.0 - b)};
  r.V = {0.0, M};
  r.coords = RegionCoords::S1;
  r.scaling = s1_scaling(b);
  r.provenance = "invariant box of the rescaled system, p > 3, alpha < 1 (upper bounds)";
  r.constants = {{"M", M}, {"beta_sup", b}, {"lambdaC", lambdaC}};
  r.validate();
  return r;
}

RegionSpec region_B_S1_lower(double x0, double v0, double p, double alpha, double LambdaC) {
  require_S1(p, alpha);
  require_nonnegative(x0, "x0");
  require_nonnegative(v0, "v0");
  require_positive(LambdaC, "LambdaC");
  const double b = beta_sup(p, alpha);
  const double floor = std::pow(b / (LambdaC * std::pow(1.0 - b, alpha)), 1.0 / (p - 2.0 - alpha));
  const double m = std::min({v0, (1.0 - b) * x0, floor});
  RegionSpec r;
  r.D = {m / (1.0 - b), kInf};
  r.V = {m, kInf};
  r.coords = RegionCoords::S1;
  r.scaling = s1_scaling(b);
  r.provenance = m > 0.0 ? "lower invariant region of the rescaled system, p > 3, alpha < 1"
                         : "lower invariant region of the rescaled system (degenerate: m = 0)";
  r.constants = {{"m", m}, {"beta_sup", b}, {"LambdaC", LambdaC}};
  r.validate();
  return r;
}

double flocking_bound_fat_tail(double D0, double V0, double p, double alpha, double lambdaC) {
  if (!(p >= 2.0 && p < 3.0) || !(alpha >= 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::WrongScenario, "fat-tail flocking bound needs 2 <= p < 3 and 0 <= alpha < 1");
  }
  require_nonnegative(D0, "D0");
  require_nonnegative(V0, "V0");
  require_positive(lambdaC, "lambdaC");
  const double inner = std::pow(D0, 1.0 - alpha) + (1.0 - alpha) / ((3.0 - p) * lambdaC) * std::pow(V0, 3.0 - p);
  return std::pow(inner, 1.0 / (1.0 - alpha));
}

Scenario2Box scenario2_box(double D0, double V0, double p, double alpha, double lambdaC, double beta) {
  if (!(p > 2.0 && p < 3.0)) throw Error(ErrorCode::WrongScenario, "scenario2_box needs 2 < p < 3");
  require_nonnegative(D0, "D0");
  require_positive(V0, "V0");
  require_positive(lambdaC, "lambdaC");
  if (!(alpha >= 0.0)) throw Error(ErrorCode::Parameter, "alpha must be >= 0");
  const double b_sub = 1.0 / (p - 2.0);
  if (!(beta > 1.0 && beta < b_sub)) throw Error(ErrorCode::Parameter, "beta must lie in (1, 1/(p-2))");
  const double ab = alpha * beta;
  if (ab == 1.0) throw Error(ErrorCode::Parameter, "alpha * beta = 1 is degenerate");
  // Right edge: D0 + V_bar / (beta - 1) <= D_bar.
  // Top edge: V_bar = max{V0, V0^(1 - beta (p-2)) (beta D_bar^alpha / lambdaC)^beta}; the max covers t_c < 0.
  const double K = std::pow(beta, beta) * std::pow(V0, 1.0 - beta * (p - 2.0)) /
                   ((beta - 1.0) * std::pow(lambdaC, beta));
  const double v_edge = D0 + V0 / (beta - 1.0);

  Scenario2Box box;
  if (ab < 1.0) {
    box.feasible = true;
    box.D_bar = std::max({2.0 * D0, 2.0 * V0 / (beta - 1.0), std::pow(2.0 * K, 1.0 / (1.0 - ab))});
  } else {
    // D_bar - K D_bar^ab peaks at the argmin below and decreases after it
    const double peak = std::pow(1.0 / (ab * K), 1.0 / (ab - 1.0));
    box.D_bar = std::max(peak, v_edge);
    box.feasible = D0 + K * std::pow(box.D_bar, ab) <= box.D_bar;
  }
  box.V_bar = std::max(V0, (beta - 1.0) * K * std::pow(box.D_bar, ab));
  return box;
}

RegionSpec scenario2_region(const Scenario2Box& box, double beta) {
  if (!box.feasible) throw Error(ErrorCode::Parameter, "scenario 2 box is infeasible");
  RegionSpec r;
  r.D = {0.0, box.D_bar};
  r.V = {0.0, box.V_bar};
  r.coords = RegionCoords::VScaled;
  r.scaling = {0.0, 0.0, beta, 0.0, false};
  r.provenance = "invariant box with sub-optimal velocity scaling, 2 < p < 3";
  r.constants = {{"D_bar", box.D_bar}, {"V_bar", box.V_bar}, {"beta", beta}};
  r.validate();
  return r;
}

std::vector<double> subcritical_beta_grid(double p, std::size_t points) {
  if (!(p > 2.0 && p < 3.0)) throw Error(ErrorCode::WrongScenario, "beta grid needs 2 < p < 3");
  if (points == 0) throw Error(ErrorCode::Parameter, "grid needs at least one point");
  const double b_sub = 1.0 / (p - 2.0);
  const double eps = 1e-6 * (b_sub - 1.0);
  const double lo = 1.0 + eps, hi = b_sub - eps;
  std::vector<double> grid(points);
  const double n = static_cast<double>(points);
  for (std::size_t k = 0; k < points; ++k) {
    // k = 0 maps to the lowest node
    const double theta = std::numbers::pi * (2.0 * static_cast<double>(points - 1 - k) + 1.0) / (2.0 * n);
    grid[k] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * std::cos(theta);
  }
  return grid;
}

double subcritical_v_exponent(double p, double alpha, double beta) {
  return (1.0 - beta * (p - 2.0)) / (alpha * beta - 1.0);
}

double subcritical_log_threshold(double p, double alpha, double lambdaC, double beta) {
  (void)p;
  const double ab = alpha * beta;
  if (!(ab > 1.0)) throw Error(ErrorCode::Parameter, "subcritical condition needs alpha * beta > 1");
  return std::log(ab - 1.0) + (std::log(beta - 1.0) + beta * std::log(lambdaC) - ab * std::log(ab)) / (ab - 1.0);
}

SubcriticalResult subcritical_membership(double D0, double V0, double p, double alpha, double lambdaC) {
  require_23_thin(p, alpha);
  require_positive(V0, "V0");
  require_nonnegative(D0, "D0");
  require_positive(lambdaC, "lambdaC");
  SubcriticalResult res;
  const double log_d0 = D0 > 0.0 ? std::log(D0) : -kInf;
  const double log_v0 = std::log(V0);
  for (double beta : subcritical_beta_grid(p)) {
    const double lhs = log_d0 + subcritical_v_exponent(p, alpha, beta) * log_v0;
    const double rhs = subcritical_log_threshold(p, alpha, lambdaC, beta);
    // relative slack so points placed exactly on the boundary count as members
    if (lhs <= rhs + 1e-12 * std::max(1.0, std::fabs(rhs))) {
      res.member = true;
      res.witness_beta = beta;
      break;
    }
  }
  return res;
}

double d0_star(double p, double alpha, double lambdaC) {
  require_23_thin(p, alpha);
  require_positive(lambdaC, "lambdaC");
  const double b = 1.0 / (p - 2.0);
  if (!(alpha * b > 1.0)) throw Error(ErrorCode::Singular, "alpha * beta_sub <= 1");
  return std::exp(subcritical_log_threshold(p, alpha, lambdaC, b));
}

double supercritical_v_threshold(double p, double alpha, double LambdaC) {
  require_23_thin(p, alpha);
  require_positive(LambdaC, "LambdaC");
  const double b = 1.0 / (p - 2.0);
  const double ab = alpha * b;
  return std::pow(alpha * LambdaC / (alpha - 1.0), b / (ab - 1.0)) * std::pow(ab / (ab - 1.0), b);
}

bool supercritical_membership(double x0, double v0, double p, double alpha, double LambdaC) {
  const double v_threshold = supercritical_v_threshold(p, alpha, LambdaC);
  require_positive(x0, "x0");
  require_positive(v0, "v0");
  const double b = 1.0 / (p - 2.0);
  return v0 >= v_threshold && x0 >= std::pow(alpha * b - 1.0, b) * v0;
}

std::optional<FloorPair> no_alignment_floor_23(double x0, double v0, double p, double alpha, double LambdaC) {
  if (!supercritical_membership(x0, v0, p, alpha, LambdaC)) return std::nullopt;
  const double q = p - 2.0;
  const double b = 1.0 / q;
  const double ab = alpha * b;
  FloorPair f;
  f.D_floor = std::pow((ab - 1.0) / ab, b) * v0;
  f.V_floor = std::pow(std::pow(v0, -q) + q * LambdaC * std::pow(f.D_floor, -alpha) / (alpha - 1.0), -1.0 / q);
  return f;
}

std::pair<double, double> no_alignment_gamma_range(double p, double alpha) {
  if (!(p > 3.0) || !(alpha > 1.0)) throw Error(ErrorCode::WrongScenario, "needs p > 3 and alpha > 1");
  return {1.0 / alpha, std::min(1.0, (p - 2.0) / alpha)};
}

double default_no_alignment_gamma(double p, double alpha) {
  const auto [lo, hi] = no_alignment_gamma_range(p, alpha);
  return 0.5 * (lo + hi);
}

double no_alignment_f(double D, double x0, double v0, double p, double alpha, double LambdaC, double gamma) {
  const double q = p - 2.0;
  return std::pow(v0, -q) * std::pow(D, alpha) -
         std::pow(x0, (1.0 - gamma) * q / gamma) * std::pow(D, alpha - q / gamma) +
         q * LambdaC / (gamma * alpha - 1.0);
}

NoAlignmentFloor no_alignment_floor(double x0, double v0, double p, double alpha, double LambdaC, double gamma) {
  const auto [g_lo, g_hi] = no_alignment_gamma_range(p, alpha);
  if (!(gamma > g_lo && gamma < g_hi)) {
    throw Error(ErrorCode::Parameter, "gamma must lie in (1/alpha, min{1, (p-2)/alpha})");
  }
  require_positive(x0, "x0");
  require_positive(v0, "v0");
  require_positive(LambdaC, "LambdaC");
  const double q = p - 2.0;
  const double c = q * LambdaC / (gamma * alpha - 1.0);
  const double k = (1.0 - gamma) * q / gamma;
  const double e = alpha - q / gamma;  // < 0
  // sign of f(D) without overflow: log(v0^-q D^alpha + c) - log(x0^k D^e)
  auto h = [&](double D) {
    const double ld = std::log(D);
    const double first = std::exp(-q * std::log(v0) + alpha * ld);
    return std::log(first + c) - (k * std::log(x0) + e * ld);
  };
  double lo = 1.0, hi = 1.0;
  for (int i = 0; h(lo) > 0.0; ++i) {
    if (i > 600) throw Error(ErrorCode::Singular, "no bracket for the floor root");
    lo *= 0.1;
  }
  for (int i = 0; h(hi) < 0.0; ++i) {
    if (i > 600) throw Error(ErrorCode::Singular, "no bracket for the floor root");
    hi *= 10.0;
  }
  double root = lo;
  if (lo != hi) {
    auto tol = [](double a, double b) { return std::fabs(b - a) <= 1e-12 * std::min(a, b); };
    const auto bracket = boost::math::tools::bisect(h, lo, hi, tol);
    root = 0.5 * (bracket.first + bracket.second);
  }
  NoAlignmentFloor f;
  f.gamma = gamma;
  f.root = root;
  f.D_floor = std::min(root, x0);
  f.V_floor = std::pow(std::pow(v0, -q) + c * std::pow(f.D_floor, -alpha), -1.0 / q);
  f.linear_floor = std::min(x0, f.V_floor);
  return f;
}

RegionSpec floor_region(const FloorPair& floors) {
  RegionSpec r;
  r.D = {floors.D_floor, kInf};
  r.V = {floors.V_floor, kInf};
  r.coords = RegionCoords::DScaled;
  r.scaling = {-1.0, 0.0, 0.0, 0.0, false};
  r.provenance = "no-alignment floor, supercritical data, 2 < p < 3";
  r.constants = {{"D_floor", floors.D_floor}, {"V_floor", floors.V_floor}};
  r.validate();
  return r;
}

RegionSpec floor_region(const NoAlignmentFloor& floors) {
  RegionSpec r;
  r.D = {floors.D_floor, kInf};
  r.V = {floors.V_floor, kInf};
  r.coords = RegionCoords::DScaled;
  r.scaling = {-floors.gamma, 0.0, 0.0, 0.0, false};
  r.provenance = "no-alignment floor, generic data, p > 3";
  r.constants = {{"gamma", floors.gamma},
                 {"root", floors.root},
                 {"D_floor", floors.D_floor},
                 {"V_floor", floors.V_floor},
                 {"linear_floor", floors.linear_floor}};
  r.validate();
  return r;
}

std::string to_string(Side side) {
  switch (side) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Bottom: return "bottom";
    case Side::Top: return "top";
  }
  return "?";
}

namespace {

bool same_coords(Coords traj, RegionCoords region) {
  return (traj == Coords::Raw && region == RegionCoords::Raw) || (traj == Coords::S1 && region == RegionCoords::S1) ||
         (traj == Coords::Sb && region == RegionCoords::Sb);
}

}  // namespace

ContainmentReport check_containment(const Trajectory& traj, const RegionSpec& region) {
  region.validate();
  bool convert = false;
  if (!same_coords(traj.coords, region.coords)) {
    if (traj.coords != Coords::Raw) {
      throw Error(ErrorCode::Coordinates, "trajectory in " + to_string(traj.coords) +
                                              " coordinates cannot be mapped to " + to_string(region.coords));
    }
    convert = true;
  }
  const double atol = traj.tolerances.atol, rtol = traj.tolerances.rtol;
  auto slack = [&](double bound) { return 10.0 * (atol + rtol * std::fabs(bound)); };

  ContainmentReport report;
  for (const auto& s : traj.samples) {
    double t = s.t, D = s.D, V = s.V;
    if (convert) {
      const double t1 = s.t + 1.0;
      const double l1 = std::log(t1) + 1.0;
      const Scaling& sc = region.scaling;
      D *= std::pow(t1, sc.D_t) * std::pow(l1, sc.D_log);
      V *= std::pow(t1, sc.V_t) * std::pow(l1, sc.V_log);
      if (sc.log_time) t = std::log(t1);
    }
    ++report.samples_checked;
    std::optional<Side> side;
    if (D < region.D.lo - slack(region.D.lo)) side = Side::Left;
    else if (D > region.D.hi + slack(region.D.hi)) side = Side::Right;
    else if (V < region.V.lo - slack(region.V.lo)) side = Side::Bottom;
    else if (V > region.V.hi + slack(region.V.hi)) side = Side::Top;
    if (side) {
      report.contained = false;
      report.first_exit = Exit{t, *side, D, V};
      break;
    }
  }
  return report;
}

std::string region_json(const RegionSpec& region) {
  using nlohmann::ordered_json;
  auto interval = [](const Interval& iv) {
    ordered_json j = ordered_json::array({iv.lo});
    if (std::isfinite(iv.hi)) j.push_back(iv.hi);
    else j.push_back(nullptr);
    return j;
  };
  ordered_json j;
  j["provenance"] = region.provenance;
  j["coords"] = to_string(region.coords);
  j["D_interval"] = interval(region.D);
  j["V_interval"] = interval(region.V);
  ordered_json constants = ordered_json::object();
  for (const auto& [key, value] : region.constants) constants[key] = value;
  j["constants"] = constants;
  return j.dump(2);
}

}  // namespace nlalign
