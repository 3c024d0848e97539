#include "nlalign/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "nlalign/error.hpp"
#include "nlalign/keyvalue.hpp"

namespace nlalign {

KernelSpec KernelSpec::constant_floor(double floor) {
  KernelSpec k;
  k.family = KernelFamily::ConstantFloor;
  k.floor = floor;
  k.validate();
  return k;
}

KernelSpec KernelSpec::smooth_tail(double alpha) {
  KernelSpec k;
  k.family = KernelFamily::SmoothTail;
  k.alpha = alpha;
  k.validate();
  return k;
}

KernelSpec KernelSpec::capped_power(double alpha, double r_min) {
  KernelSpec k;
  k.family = KernelFamily::CappedPower;
  k.alpha = alpha;
  k.r_min = r_min;
  k.validate();
  return k;
}

void KernelSpec::validate() const {
  switch (family) {
    case KernelFamily::ConstantFloor:
      if (!(floor > 0.0) || !std::isfinite(floor)) {
        throw Error(ErrorCode::Parameter, "constant kernel floor must be positive");
      }
      break;
    case KernelFamily::CappedPower:
      if (!(r_min > 0.0) || !std::isfinite(r_min)) {
        throw Error(ErrorCode::Parameter, "kernel.r_min must be positive");
      }
      [[fallthrough]];
    case KernelFamily::SmoothTail:
      if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw Error(ErrorCode::Parameter, "kernel.alpha must be >= 0");
      }
      break;
  }
}

double kernel_eval(const KernelSpec& kernel, double r) {
  if (!(r >= 0.0)) throw Error(ErrorCode::Domain, "kernel_eval: r must be nonnegative");
  switch (kernel.family) {
    case KernelFamily::ConstantFloor:
      return kernel.floor;
    case KernelFamily::SmoothTail:
      if (kernel.alpha == 0.0) return 1.0;
      return std::pow(1.0 + r * r, -0.5 * kernel.alpha);
    case KernelFamily::CappedPower:
      if (kernel.alpha == 0.0) return 1.0;
      return std::pow(std::max(r, kernel.r_min), -kernel.alpha);
  }
  return 0.0;
}

TailConstants tail_constants(const KernelSpec& kernel) {
  switch (kernel.family) {
    case KernelFamily::ConstantFloor:
      throw Error(ErrorCode::NoTailClass, "constant kernel has no tail class");
    case KernelFamily::SmoothTail:
      // r^alpha (1+r^2)^(-alpha/2) = (r^2/(1+r^2))^(alpha/2) lies in [2^(-alpha/2), 1) for r >= 1.
      return {std::pow(2.0, -0.5 * kernel.alpha), 1.0, 1.0};
    case KernelFamily::CappedPower:
      return {1.0, 1.0, kernel.r_min};
  }
  return {};
}

bool tail_sandwich_holds(const KernelSpec& kernel, double alpha, const TailConstants& tc,
                         int samples) {
  const double lo = std::log(tc.R);
  const double hi = std::log(tc.R * 1e6);
  for (int i = 0; i < samples; ++i) {
    const double r = std::exp(lo + (hi - lo) * i / (samples - 1));
    const double phi = kernel_eval(kernel, r);
    const double power = std::pow(r, -alpha);
    const double slack = 1e-12 * power;
    if (phi < tc.lambda * power - slack || phi > tc.Lambda * power + slack) return false;
  }
  return true;
}

SimParams SimParams::from_kernel(double p, const KernelSpec& kernel, double total_mass) {
  SimParams params;
  params.p = p;
  params.kernel = kernel;
  params.total_mass = total_mass;
  if (kernel.has_tail()) {
    const TailConstants tc = tail_constants(kernel);
    params.alpha = kernel.alpha;
    params.lambda = tc.lambda;
    params.Lambda = tc.Lambda;
    params.R = tc.R;
  } else {
    params.alpha = 0.0;
    params.lambda = params.Lambda = kernel.floor;
    params.R = 1.0;
  }
  params.validate();
  return params;
}

void SimParams::validate() const {
  if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorCode::Parameter, "p must be > 1");
  if (!(alpha >= 0.0)) throw Error(ErrorCode::Parameter, "alpha must be >= 0");
  if (!(lambda > 0.0)) throw Error(ErrorCode::Parameter, "lambda must be > 0");
  if (!(Lambda >= lambda)) throw Error(ErrorCode::Parameter, "Lambda must be >= lambda");
  if (!(R > 0.0)) throw Error(ErrorCode::Parameter, "R must be > 0");
  if (!(total_mass > 0.0) || !std::isfinite(total_mass)) {
    throw Error(ErrorCode::Parameter, "total_mass must be > 0");
  }
  kernel.validate();
  if (kernel.has_tail()) {
    if (std::fabs(alpha - kernel.alpha) > 1e-12) {
      throw Error(ErrorCode::Parameter, "alpha does not match kernel.alpha");
    }
    if (!tail_sandwich_holds(kernel, alpha, {lambda, Lambda, R})) {
      throw Error(ErrorCode::Parameter, "kernel violates lambda r^-alpha <= phi <= Lambda r^-alpha on r >= R");
    }
  }
}

void phi_p_into(std::span<const double> z, double p, std::span<double> out) {
  if (!(p > 1.0)) throw Error(ErrorCode::Parameter, "phi_p: p must be > 1");
  double norm2 = 0.0;
  for (double zi : z) norm2 += zi * zi;
  if (norm2 == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double scale = (p == 2.0) ? 1.0 : std::pow(norm2, 0.5 * (p - 2.0));
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = scale * z[i];
}

std::vector<double> phi_p(std::span<const double> z, double p) {
  std::vector<double> out(z.size());
  phi_p_into(z, p, out);
  return out;
}

DissipationCheck pairwise_dissipation_holds(std::span<const double> a, std::span<const double> b,
                                            std::span<const double> c, double p) {
  if (!(p > 1.0)) throw Error(ErrorCode::Parameter, "p must be > 1");
  if (a.size() != b.size() || a.size() != c.size()) {
    throw Error(ErrorCode::Domain, "dimension mismatch");
  }
  const std::size_t d = a.size();
  std::vector<double> ab(d), ca(d), cb(d);
  double nab = 0.0, nca = 0.0, ncb = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    ab[i] = a[i] - b[i];
    ca[i] = c[i] - a[i];
    cb[i] = c[i] - b[i];
    nab += ab[i] * ab[i];
    nca += ca[i] * ca[i];
    ncb += cb[i] * cb[i];
  }
  // a tiny relative slack keeps the exact boundary of the cone admissible
  const double cone = nab * (1.0 + 1e-12);
  if (nca > cone || ncb > cone) return DissipationCheck::NotAdmissible;

  const auto phi_ca = phi_p(ca, p);
  const auto phi_cb = phi_p(cb, p);
  double lhs = 0.0;
  for (std::size_t i = 0; i < d; ++i) lhs += ab[i] * (phi_ca[i] - phi_cb[i]);
  const double dist_p = std::pow(std::sqrt(nab), p);
  const double bound = -std::pow(2.0, 2.0 - p) * dist_p;
  const double tol = 1e-12 * std::max(1.0, dist_p);
  return lhs <= bound + tol ? DissipationCheck::Holds : DissipationCheck::Violated;
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::ConstantFloor: return "constant";
    case KernelFamily::SmoothTail: return "smooth_tail";
    case KernelFamily::CappedPower: return "capped_power";
  }
  return "?";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "constant" || name == "constant_floor") return KernelFamily::ConstantFloor;
  if (name == "smooth_tail") return KernelFamily::SmoothTail;
  if (name == "capped_power") return KernelFamily::CappedPower;
  throw Error(ErrorCode::Config, "unknown kernel family '" + name +
                                     "' (expected constant, smooth_tail or capped_power)");
}

std::string format_params(const SimParams& params) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "p = " << params.p << '\n'
      << "alpha = " << params.alpha << '\n'
      << "lambda = " << params.lambda << '\n'
      << "Lambda = " << params.Lambda << '\n'
      << "R = " << params.R << '\n'
      << "total_mass = " << params.total_mass << '\n'
      << "kernel.family = " << to_string(params.kernel.family) << '\n';
  switch (params.kernel.family) {
    case KernelFamily::ConstantFloor:
      out << "kernel.floor = " << params.kernel.floor << '\n';
      break;
    case KernelFamily::CappedPower:
      out << "kernel.alpha = " << params.kernel.alpha << '\n'
          << "kernel.r_min = " << params.kernel.r_min << '\n';
      break;
    case KernelFamily::SmoothTail:
      out << "kernel.alpha = " << params.kernel.alpha << '\n';
      break;
  }
  return out.str();
}

SimParams parse_params(const std::string& text) {
  const auto doc = KeyValueDoc::parse(text);
  const auto unknown = doc.unknown_keys({"p", "alpha", "lambda", "Lambda", "R", "total_mass",
                                         "kernel.family", "kernel.alpha", "kernel.r_min",
                                         "kernel.floor"});
  if (!unknown.empty()) throw Error(ErrorCode::Config, "unknown key '" + unknown.front() + "'");

  KernelSpec kernel;
  kernel.family = kernel_family_from_string(doc.get_string("kernel.family", "constant"));
  switch (kernel.family) {
    case KernelFamily::ConstantFloor:
      kernel = KernelSpec::constant_floor(doc.get_double("kernel.floor", 1.0));
      break;
    case KernelFamily::SmoothTail:
      kernel = KernelSpec::smooth_tail(doc.get_double("kernel.alpha", doc.get_double("alpha", 0.0)));
      break;
    case KernelFamily::CappedPower:
      kernel = KernelSpec::capped_power(doc.get_double("kernel.alpha", doc.get_double("alpha", 0.0)),
                                        doc.get_double("kernel.r_min", kDefaultCapRadius));
      break;
  }
  SimParams params = SimParams::from_kernel(doc.get_double("p"), kernel,
                                            doc.get_double("total_mass", 1.0));
  params.alpha = doc.get_double("alpha", params.alpha);
  params.lambda = doc.get_double("lambda", params.lambda);
  params.Lambda = doc.get_double("Lambda", params.Lambda);
  params.R = doc.get_double("R", params.R);
  params.validate();
  return params;
}

}  // namespace nlalign
