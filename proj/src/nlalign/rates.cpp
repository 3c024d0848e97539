#include "nlalign/rates.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "nlalign/error.hpp"

namespace nlalign {

namespace {

constexpr double kEq = 1e-12;

bool near(double a, double b) { return std::fabs(a - b) <= kEq * std::max(1.0, std::fabs(b)); }

}  // namespace

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::S0: return "S0";
    case Scenario::S1: return "S1";
    case Scenario::S2: return "S2";
    case Scenario::Sb: return "Sb";
    case Scenario::S3: return "S3";
    case Scenario::S4: return "S4";
    case Scenario::Boundary: return "boundary";
    case Scenario::OutOfRange: return "out_of_range";
  }
  return "?";
}

std::string to_string(Conditionality c) {
  switch (c) {
    case Conditionality::Unconditional: return "unconditional";
    case Conditionality::SemiUnconditional: return "semi_unconditional";
    case Conditionality::Conditional: return "conditional";
    case Conditionality::NoAlignmentGeneric: return "no_alignment_generic";
    case Conditionality::None: return "none";
  }
  return "?";
}

ScenarioClass classify_scenario(double p, double alpha) {
  if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorCode::Parameter, "p must be > 1");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::Parameter, "alpha must be >= 0");
  ScenarioClass sc;
  const bool p2 = near(p, 2.0), p3 = near(p, 3.0), a1 = near(alpha, 1.0);

  if (p < 2.0 && !p2) {
    sc.label = Scenario::OutOfRange;
    sc.note = "1 < p < 2: finite-time alignment under a positive kernel floor; no asymptotic rate";
    return sc;
  }
  if (p2) {
    if (alpha < 1.0 || a1) {
      sc.label = Scenario::S0;
      sc.V_exponent = std::numeric_limits<double>::infinity();
      sc.D_exponent = 0.0;
      sc.conditionality = Conditionality::Unconditional;
      sc.note = "linear alignment: exponential decay of V, bounded D";
    } else {
      sc.label = Scenario::Boundary;
      sc.note = "p = 2 with thin tail: linear model, conditional flocking";
    }
    return sc;
  }
  if (a1) {
    sc.label = Scenario::Boundary;
    sc.note = "alpha = 1 separates fat and thin tails";
    return sc;
  }
  if (p3) {
    if (alpha < 1.0) {
      sc.label = Scenario::Sb;
      sc.V_exponent = 1.0;
      sc.D_exponent = 0.0;
      sc.log_power_V = alpha / (1.0 - alpha);
      sc.log_power_D = 1.0 / (1.0 - alpha);
      sc.conditionality = Conditionality::Unconditional;
      sc.note = "borderline p = 3: logarithmic corrections";
    } else {
      sc.label = Scenario::Boundary;
      sc.note = "p = 3 with thin tail";
    }
    return sc;
  }
  if (p < 3.0) {
    if (alpha < 1.0) {
      sc.label = Scenario::S2;
      sc.conditionality = Conditionality::Unconditional;
      sc.note = "2 < p < 3, fat tail: flocking and algebraic alignment";
    } else {
      sc.label = Scenario::S3;
      sc.conditionality = Conditionality::SemiUnconditional;
      sc.note = "2 < p < 3, thin tail: rates hold for subcritical data";
    }
    sc.V_exponent = 1.0 / (p - 2.0);
    sc.D_exponent = 0.0;
    return sc;
  }
  if (alpha < 1.0) {
    const double b = (1.0 - alpha) / (p - 2.0 - alpha);
    sc.label = Scenario::S1;
    sc.V_exponent = b;
    sc.D_exponent = 1.0 - b;
    sc.conditionality = Conditionality::Unconditional;
    sc.note = "p > 3, fat tail: alignment without flocking";
  } else {
    sc.label = Scenario::S4;
    sc.conditionality = Conditionality::NoAlignmentGeneric;
    sc.note = "p > 3, thin tail: no alignment for generic data";
  }
  return sc;
}

std::string scenario_json(const ScenarioClass& sc, double p, double alpha) {
  nlohmann::ordered_json j;
  j["p"] = p;
  j["alpha"] = alpha;
  j["label"] = to_string(sc.label);
  auto opt = [](const std::optional<double>& v) -> nlohmann::ordered_json {
    if (!v) return nullptr;
    if (std::isinf(*v)) return "exponential";
    return *v;
  };
  j["V_exponent"] = opt(sc.V_exponent);
  j["D_exponent"] = opt(sc.D_exponent);
  j["log_power_V"] = opt(sc.log_power_V);
  j["log_power_D"] = opt(sc.log_power_D);
  j["conditionality"] = to_string(sc.conditionality);
  j["note"] = sc.note;
  return j.dump(2);
}

std::string to_string(Field field) { return field == Field::D ? "D" : "V"; }

Field field_from_string(const std::string& name) {
  if (name == "D") return Field::D;
  if (name == "V") return Field::V;
  throw Error(ErrorCode::Config, "unknown field '" + name + "' (D or V)");
}

FitWindow default_fit_window(const Trajectory& traj) {
  if (traj.samples.empty()) throw Error(ErrorCode::Fit, "empty trajectory");
  const double t_end = traj.samples.back().t;
  return {t_end / 100.0, t_end};
}

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::Fit, "fit window has no spread in the abscissa");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  f.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return f;
}

struct WindowData {
  std::vector<double> t;
  std::vector<double> value;
};

WindowData collect(const Trajectory& traj, Field field, const FitWindow& w) {
  if (!(w.lo > 0.0) || !(w.hi > w.lo)) throw Error(ErrorCode::Fit, "fit window needs 0 < lo < hi");
  WindowData d;
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const Sample& s = traj.samples[i];
    if (s.t < w.lo || s.t > w.hi) continue;
    const double v = field == Field::D ? s.D : s.V;
    if (!(v > 0.0)) {
      throw Error(ErrorCode::Fit, "nonpositive " + to_string(field) + " at sample " + std::to_string(i) +
                                      " (t = " + std::to_string(s.t) + ")");
    }
    d.t.push_back(s.t);
    d.value.push_back(v);
  }
  if (d.t.size() < kMinFitPoints) {
    throw Error(ErrorCode::Fit, "fit window holds " + std::to_string(d.t.size()) + " samples; need at least " +
                                    std::to_string(kMinFitPoints));
  }
  return d;
}

}  // namespace

RateFit fit_power(const Trajectory& traj, Field field, std::optional<FitWindow> window) {
  const FitWindow w = window.value_or(default_fit_window(traj));
  const WindowData d = collect(traj, field, w);
  std::vector<double> x(d.t.size()), y(d.t.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::log(d.t[i]);
    y[i] = std::log(d.value[i]);
  }
  const LineFit lf = least_squares(x, y);
  RateFit fit;
  fit.field = field;
  fit.exponent = field == Field::V ? -lf.slope : lf.slope;
  fit.r_squared = lf.r2;
  fit.window = w;
  fit.n_points = x.size();
  fit.intercept = lf.intercept;
  return fit;
}

RateFit fit_log_corrected(const Trajectory& traj, Field field, std::optional<FitWindow> window) {
  const FitWindow w = window.value_or(default_fit_window(traj));
  if (w.lo < 100.0) throw Error(ErrorCode::Fit, "log-corrected fits need window.lo >= 100");
  const WindowData d = collect(traj, field, w);
  std::vector<double> x(d.t.size()), y(d.t.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::log(std::log(d.t[i]));
    y[i] = std::log(field == Field::V ? d.value[i] * d.t[i] : d.value[i]);
  }
  const LineFit lf = least_squares(x, y);
  RateFit fit;
  fit.field = field;
  fit.exponent = field == Field::V ? 1.0 : 0.0;
  fit.log_power = lf.slope;
  fit.r_squared = lf.r2;
  fit.window = w;
  fit.n_points = x.size();
  fit.intercept = lf.intercept;
  return fit;
}

std::string rate_fit_json(const RateFit& fit) {
  nlohmann::ordered_json j;
  j["field"] = to_string(fit.field);
  j["exponent"] = fit.exponent;
  if (fit.log_power) j["log_power"] = *fit.log_power;
  else j["log_power"] = nullptr;
  j["r2"] = fit.r_squared;
  j["window"] = {fit.window.lo, fit.window.hi};
  j["n"] = fit.n_points;
  return j.dump(2);
}

double psi_power(double alpha, double D0, double D) {
  if (!(D0 > 0.0) || !(D > 0.0)) throw Error(ErrorCode::Singular, "power-law psi needs D0, D > 0");
  if (alpha == 1.0) return std::log(D / D0);
  return (std::pow(D, 1.0 - alpha) - std::pow(D0, 1.0 - alpha)) / (1.0 - alpha);
}

double psi_kernel(const KernelSpec& kernel, double D0, double D) {
  kernel.validate();
  if (!(D0 >= 0.0) || !(D >= 0.0)) throw Error(ErrorCode::Domain, "psi needs D0, D >= 0");
  if (D == D0) return 0.0;
  switch (kernel.family) {
    case KernelFamily::ConstantFloor:
      return kernel.floor * (D - D0);
    case KernelFamily::CappedPower: {
      // antiderivative of min(rmin^-alpha, r^-alpha)
      const double rm = kernel.r_min, a = kernel.alpha;
      auto F = [&](double r) {
        const double cap = std::pow(rm, -a);
        if (r <= rm) return cap * r;
        return cap * rm + psi_power(a, rm, r);
      };
      return F(D) - F(D0);
    }
    case KernelFamily::SmoothTail: {
      auto phi = [&](double r) { return kernel_eval(kernel, r); };
      const double lo = std::min(D0, D), hi = std::max(D0, D);
      const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(phi, lo, hi, 15, 1e-14);
      return D >= D0 ? integral : -integral;
    }
  }
  return 0.0;
}

namespace {

LyapunovSeries build_series(const Trajectory& traj, double p, const std::function<double(double)>& psi, double coef) {
  if (!(p >= 2.0 && p < 3.0)) throw Error(ErrorCode::WrongScenario, "Lyapunov functional needs 2 <= p < 3");
  if (traj.coords != Coords::Raw) throw Error(ErrorCode::Coordinates, "Lyapunov functional needs raw coordinates");
  if (traj.samples.empty()) throw Error(ErrorCode::Parameter, "empty trajectory");
  LyapunovSeries out;
  for (const auto& s : traj.samples) {
    out.t.push_back(s.t);
    out.E.push_back(std::pow(std::max(s.V, 0.0), 3.0 - p) + (3.0 - p) * coef * psi(s.D));
  }
  out.tolerance = 1e-9 * (1.0 + std::fabs(out.E.front()));
  for (std::size_t k = 1; k < out.E.size(); ++k) {
    if (out.E[k] > out.E[k - 1] + out.tolerance) {
      out.monotone = false;
      out.first_increase = k;
      break;
    }
  }
  return out;
}

}  // namespace

LyapunovSeries lyapunov_series(const Trajectory& traj, double p, double alpha, double lambdaC, double D0) {
  if (!(lambdaC > 0.0)) throw Error(ErrorCode::Parameter, "lambdaC must be > 0");
  return build_series(traj, p, [&](double D) { return psi_power(alpha, D0, D); }, lambdaC);
}

LyapunovSeries lyapunov_series_kernel(const Trajectory& traj, double p, const KernelSpec& kernel, double C, double D0) {
  if (!(C > 0.0)) throw Error(ErrorCode::Parameter, "C must be > 0");
  return build_series(traj, p, [&](double D) { return psi_kernel(kernel, D0, D); }, C);
}

}  // namespace nlalign
