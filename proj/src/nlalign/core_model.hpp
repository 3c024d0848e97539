#pragma once

#include <span>
#include <string>
#include <vector>

namespace nlalign {

inline constexpr double kDefaultCapRadius = 1e-6;

enum class KernelFamily { ConstantFloor, SmoothTail, CappedPower };

/// Communication protocol phi(r). All families are radially symmetric,
/// nonnegative and nonincreasing in r, and finite at r = 0.
///
///   ConstantFloor(floor)     phi(r) = floor
///   SmoothTail(alpha)        phi(r) = (1 + r^2)^(-alpha/2)
///   CappedPower(alpha, rmin) phi(r) = min(rmin^-alpha, r^-alpha)
struct KernelSpec {
  KernelFamily family = KernelFamily::ConstantFloor;
  double alpha = 0.0;
  double r_min = kDefaultCapRadius;
  double floor = 1.0;

  static KernelSpec constant_floor(double floor);
  static KernelSpec smooth_tail(double alpha);
  static KernelSpec capped_power(double alpha, double r_min = kDefaultCapRadius);

  bool has_tail() const { return family != KernelFamily::ConstantFloor; }
  /// alpha of the power tail; 0 for the constant kernel.
  double tail_exponent() const { return has_tail() ? alpha : 0.0; }
  void validate() const;
};

/// lambda r^-alpha <= phi(r) <= Lambda r^-alpha for r >= R.
struct TailConstants {
  double lambda = 1.0;
  double Lambda = 1.0;
  double R = 1.0;
};

struct SimParams {
  double p = 2.0;
  double alpha = 0.0;
  double lambda = 1.0;
  double Lambda = 1.0;
  double R = 1.0;
  double total_mass = 1.0;
  KernelSpec kernel;

  /// Fills alpha and the tail constants from the kernel (ConstantFloor gets
  /// alpha = 0 and lambda = Lambda = floor).
  static SimParams from_kernel(double p, const KernelSpec& kernel, double total_mass);

  /// Throws Error(Parameter) on p <= 1, lambda <= 0, Lambda < lambda, R <= 0,
  /// total_mass <= 0, and when a tail-classed kernel violates the sandwich.
  void validate() const;
};

double kernel_eval(const KernelSpec& kernel, double r);

TailConstants tail_constants(const KernelSpec& kernel);

/// Dense log-spaced check of the tail sandwich on [R, 1e6 R].
bool tail_sandwich_holds(const KernelSpec& kernel, double alpha, const TailConstants& tc,
                         int samples = 4096);

/// Phi(z) = |z|^(p-2) z, with Phi(0) = 0 for every p > 1.
std::vector<double> phi_p(std::span<const double> z, double p);
void phi_p_into(std::span<const double> z, double p, std::span<double> out);
inline double phi_p_scalar(double z, double p);

enum class DissipationCheck { Holds, Violated, NotAdmissible };

/// Checks (a-b).(Phi(c-a) - Phi(c-b)) <= -2^(2-p)|a-b|^p + tol with
/// tol = 1e-12 max(1, |a-b|^p). c must satisfy |c-a| <= |a-b| and
/// |c-b| <= |a-b|; otherwise NotAdmissible.
DissipationCheck pairwise_dissipation_holds(std::span<const double> a, std::span<const double> b,
                                            std::span<const double> c, double p);

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// key = value text with the documented field names (p, alpha, lambda,
/// Lambda, R, total_mass, kernel.family, kernel.alpha, kernel.r_min,
/// kernel.floor). Missing tail constants are filled from the kernel.
std::string format_params(const SimParams& params);
SimParams parse_params(const std::string& text);

}  // namespace nlalign

#include <cmath>

inline double nlalign::phi_p_scalar(double z, double p) {
  if (z == 0.0) return 0.0;
  if (p == 2.0) return z;
  return std::pow(std::fabs(z), p - 2.0) * z;
}
