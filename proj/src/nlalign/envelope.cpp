#include "nlalign/envelope.hpp"

#include <algorithm>
#include <cmath>

#include "nlalign/error.hpp"

namespace nlalign {

std::string to_string(RateBound bound) {
  switch (bound) {
    case RateBound::Exact: return "exact";
    case RateBound::Lower: return "lower";
    case RateBound::Upper: return "upper";
  }
  return "?";
}

RateBound rate_bound_from_string(const std::string& name) {
  if (name == "exact") return RateBound::Exact;
  if (name == "lower") return RateBound::Lower;
  if (name == "upper") return RateBound::Upper;
  throw Error(ErrorCode::Config, "unknown rate bound '" + name + "' (exact, lower, upper)");
}

double alignment_constant(double p, double total_mass) {
  if (!(p > 1.0)) throw Error(ErrorCode::Parameter, "p must be > 1");
  if (!(total_mass > 0.0)) throw Error(ErrorCode::Parameter, "total_mass must be > 0");
  return std::pow(2.0, 2.0 - p) * total_mass;
}

EnvelopeParams EnvelopeParams::from_sim(const SimParams& sim, double C) {
  EnvelopeParams e;
  e.p = sim.p;
  e.alpha = sim.alpha;
  e.lambda = sim.lambda;
  e.Lambda = sim.Lambda;
  e.C = C;
  e.kernel = sim.kernel;
  e.validate();
  return e;
}

EnvelopeParams EnvelopeParams::power_law(double p, double alpha, double lambdaC) {
  EnvelopeParams e;
  e.p = p;
  e.alpha = alpha;
  e.lambda = e.Lambda = 1.0;
  e.C = lambdaC;
  e.kernel = KernelSpec::capped_power(alpha);
  e.validate();
  return e;
}

void EnvelopeParams::validate() const {
  if (!(p > 1.0)) throw Error(ErrorCode::Parameter, "p must be > 1");
  if (!(alpha >= 0.0)) throw Error(ErrorCode::Parameter, "alpha must be >= 0");
  if (!(lambda > 0.0) || !(Lambda >= lambda)) throw Error(ErrorCode::Parameter, "need 0 < lambda <= Lambda");
  if (!(C > 0.0)) throw Error(ErrorCode::Parameter, "alignment constant C must be > 0");
  kernel.validate();
}

double EnvelopeParams::beta_sup() const { return (1.0 - alpha) / (p - 2.0 - alpha); }
double EnvelopeParams::beta_sub() const { return 1.0 / (p - 2.0); }
double EnvelopeParams::gamma() const { return alpha / (1.0 - alpha); }

namespace {

double power_rate(double D, double alpha, double coefficient) {
  if (alpha == 0.0) return coefficient;
  if (!(D > 0.0)) throw Error(ErrorCode::Singular, "power-law rate evaluated at D = 0; use a capped kernel");
  return coefficient * std::pow(D, -alpha);
}

double tail_coefficient(const EnvelopeParams& params, RateBound bound) {
  switch (bound) {
    case RateBound::Lower: return params.lambda * params.C;
    case RateBound::Upper: return params.Lambda * params.C;
    case RateBound::Exact: break;
  }
  throw Error(ErrorCode::Parameter, "rescaled systems use the lower or upper tail rate, not the exact kernel");
}

}  // namespace

Derivative envelope_rhs(const EnvelopeState& s, const EnvelopeParams& params, RateBound bound) {
  if (s.coords != Coords::Raw) throw Error(ErrorCode::Coordinates, "envelope_rhs expects raw coordinates");
  const double V = std::max(s.V, 0.0);
  if (V == 0.0) return {0.0, 0.0};
  double kappa = 0.0;
  if (bound == RateBound::Exact) {
    kappa = params.C * kernel_eval(params.kernel, std::max(s.D, 0.0));
  } else {
    kappa = power_rate(s.D, params.alpha, tail_coefficient(params, bound));
  }
  return {V, -kappa * (params.p == 2.0 ? V : std::pow(V, params.p - 1.0))};
}

Derivative scaled_rhs_S1(const EnvelopeState& s, const EnvelopeParams& params, RateBound bound) {
  if (!(params.p > 3.0) || !(params.alpha >= 0.0 && params.alpha < 1.0)) {
    throw Error(ErrorCode::WrongScenario, "S1 scaling needs p > 3 and 0 <= alpha < 1");
  }
  const double b = params.beta_sup();
  const double V = std::max(s.V, 0.0);
  const double rate = power_rate(s.D, params.alpha, tail_coefficient(params, bound));
  return {(b - 1.0) * s.D + V, b * V - rate * std::pow(V, params.p - 1.0)};
}

Derivative log_scaled_rhs_Sb(const EnvelopeState& s, const EnvelopeParams& params, RateBound bound) {
  if (params.p != 3.0 || !(params.alpha >= 0.0 && params.alpha < 1.0)) {
    throw Error(ErrorCode::WrongScenario, "Sb scaling needs p = 3 and 0 <= alpha < 1");
  }
  const double V = std::max(s.V, 0.0);
  const double rate = power_rate(s.D, params.alpha, tail_coefficient(params, bound));
  return {(-s.D / (1.0 - params.alpha) + V) / (s.time + 1.0), V * (1.0 - rate * V)};
}

double closed_form_global(double p, double c_phi_floor, double V0, double t) {
  if (!(p > 1.0)) throw Error(ErrorCode::Parameter, "p must be > 1");
  if (!(c_phi_floor > 0.0)) throw Error(ErrorCode::Parameter, "C * phi_floor must be > 0");
  if (!(V0 >= 0.0) || !(t >= 0.0)) throw Error(ErrorCode::Domain, "need V0 >= 0 and t >= 0");
  if (V0 == 0.0) return 0.0;
  if (p == 2.0) return V0 * std::exp(-c_phi_floor * t);
  if (p > 2.0) return std::pow(std::pow(V0, 2.0 - p) + (p - 2.0) * c_phi_floor * t, -1.0 / (p - 2.0));
  const double base = std::pow(V0, 2.0 - p) - (2.0 - p) * c_phi_floor * t;
  return base <= 0.0 ? 0.0 : std::pow(base, 1.0 / (2.0 - p));
}

double extinction_time(double p, double c_phi_floor, double V0) {
  if (!(p > 1.0 && p < 2.0)) throw Error(ErrorCode::WrongScenario, "finite extinction only for 1 < p < 2");
  if (!(c_phi_floor > 0.0)) throw Error(ErrorCode::Parameter, "C * phi_floor must be > 0");
  return std::pow(V0, 2.0 - p) / ((2.0 - p) * c_phi_floor);
}

Trajectory integrate_envelope(const EnvelopeState& s0, const EnvelopeParams& params, double t_end,
                              const Schedule& schedule, const EnvelopeRunOptions& options) {
  params.validate();
  if (!(s0.D >= 0.0) || !(s0.V >= 0.0)) throw Error(ErrorCode::Domain, "envelope state needs D, V >= 0");
  if (!(t_end > s0.time)) throw Error(ErrorCode::Domain, "t_end must exceed the initial time");
  if (schedule.empty()) throw Error(ErrorCode::Parameter, "schedule must be nonempty");
  if (s0.coords != Coords::Raw && options.bound == RateBound::Exact) {
    throw Error(ErrorCode::Parameter, "rescaled envelope runs need the lower or upper rate bound");
  }
  // surface scenario errors before stepping
  if (s0.coords == Coords::S1) scaled_rhs_S1({1.0, 1.0, 0.0, Coords::S1}, params, options.bound);
  if (s0.coords == Coords::Sb) log_scaled_rhs_Sb({1.0, 1.0, 0.0, Coords::Sb}, params, options.bound);

  Trajectory traj;
  traj.engine = "envelope";
  traj.coords = s0.coords;
  traj.alignment_C = params.C;
  traj.tolerances = options.tolerances;
  traj.params.p = params.p;
  traj.params.alpha = params.alpha;
  traj.params.lambda = params.lambda;
  traj.params.Lambda = params.Lambda;
  traj.params.kernel = params.kernel;

  const Coords coords = s0.coords;
  auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    const EnvelopeState s{y[0], y[1], t, coords};
    Derivative d;
    switch (coords) {
      case Coords::Raw: d = envelope_rhs(s, params, options.bound); break;
      case Coords::S1: d = scaled_rhs_S1(s, params, options.bound); break;
      case Coords::Sb: d = log_scaled_rhs_Sb(s, params, options.bound); break;
    }
    dy[0] = d.dD;
    dy[1] = d.dV;
  };

  ode::DormandPrince stepper(2, rhs, options.tolerances);
  const double y0[2] = {s0.D, s0.V};
  stepper.reset(s0.time, y0);

  auto record = [&](double t, double D, double V) {
    Sample s;
    s.t = t;
    s.D = D;
    s.V = V;
    traj.samples.push_back(std::move(s));
  };
  record(s0.time, s0.D, s0.V);

  ode::StopPredicate stop;
  const bool can_go_extinct = coords == Coords::Raw && params.p < 2.0;
  double prev_t = s0.time, prev_D = s0.D, prev_V = s0.V;
  if (can_go_extinct) {
    stop = [&](double t, std::span<const double> y) {
      if (y[1] < options.extinction_threshold) return true;
      prev_t = t;
      prev_D = y[0];
      prev_V = y[1];
      return false;
    };
  }

  double frozen_D = 0.0;
  try {
    for (double ts : schedule.times()) {
      if (ts <= s0.time) continue;
      const double target = std::min(ts, t_end);
      if (traj.status == RunStatus::Extinct) {
        record(target, frozen_D, 0.0);
      } else if (!stepper.advance_to(target, stop)) {
        traj.status = RunStatus::Extinct;
        frozen_D = stepper.y()[0];
        // invert the local closed form from the last state above threshold
        double kappa = 0.0;
        const EnvelopeState last{prev_D, 1.0, prev_t, Coords::Raw};
        kappa = -envelope_rhs(last, params, options.bound).dV;
        traj.extinction_time = prev_t + std::pow(prev_V, 2.0 - params.p) / ((2.0 - params.p) * kappa);
        if (stepper.t() < target) record(stepper.t(), frozen_D, 0.0);
        record(target, frozen_D, 0.0);
      } else {
        record(target, stepper.y()[0], stepper.y()[1]);
      }
      if (target >= t_end) break;
    }
    if (traj.samples.back().t < t_end) {
      if (traj.status == RunStatus::Extinct) {
        record(t_end, frozen_D, 0.0);
      } else {
        stepper.advance_to(t_end);
        record(t_end, stepper.y()[0], stepper.y()[1]);
      }
    }
  } catch (const IntegrationFailure&) {
    throw;
  } catch (const Error& e) {
    traj.stats = stepper.stats();
    throw IntegrationFailure(e.what(), std::move(traj));
  }
  traj.stats = stepper.stats();
  return traj;
}

Trajectory to_S1_coords(const Trajectory& raw, double beta_sup) {
  if (raw.coords != Coords::Raw) throw Error(ErrorCode::Coordinates, "to_S1_coords expects a raw trajectory");
  Trajectory out = raw;
  out.coords = Coords::S1;
  for (auto& s : out.samples) {
    const double t1 = s.t + 1.0;
    s.D *= std::pow(t1, beta_sup - 1.0);
    s.V *= std::pow(t1, beta_sup);
    s.t = std::log(t1);
  }
  return out;
}

}  // namespace nlalign
