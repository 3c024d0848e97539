#pragma once

#include "nlalign/core_model.hpp"
#include "nlalign/ode.hpp"
#include "nlalign/trajectory.hpp"

namespace nlalign {

/// Which rate the envelope uses for the alignment term.
///   Exact: C phi(D)
///   Lower: C lambda D^-alpha  (weakest admissible alignment)
///   Upper: C Lambda D^-alpha  (strongest admissible alignment)
enum class RateBound { Exact, Lower, Upper };

std::string to_string(RateBound bound);
RateBound rate_bound_from_string(const std::string& name);

/// C = 2^(2-p) m0, the dissipation constant of the paired inequalities.
double alignment_constant(double p, double total_mass);

struct EnvelopeParams {
  double p = 2.0;
  double alpha = 0.0;
  double lambda = 1.0;
  double Lambda = 1.0;
  double C = 1.0;
  KernelSpec kernel;

  static EnvelopeParams from_sim(const SimParams& sim, double C);
  /// Pure power-law envelope with the given products lambda*C (= Lambda*C).
  static EnvelopeParams power_law(double p, double alpha, double lambdaC);

  void validate() const;

  /// (1 - alpha)/(p - 2 - alpha): decay rate of V for p > 3, fat tail.
  double beta_sup() const;
  /// 1/(p - 2): decay rate of V for 2 < p < 3.
  double beta_sub() const;
  /// alpha/(1 - alpha): log-correction power at p = 3.
  double gamma() const;
};

struct EnvelopeState {
  double D = 0.0;
  double V = 0.0;
  double time = 0.0;  // t for Raw, tau for S1 and Sb
  Coords coords = Coords::Raw;
};

struct Derivative {
  double dD = 0.0;
  double dV = 0.0;
};

/// D' = V, V' = -kappa V^(p-1).
Derivative envelope_rhs(const EnvelopeState& s, const EnvelopeParams& params, RateBound bound);

/// Autonomous rescaled system for p > 3 (beta^* in (0,1)):
/// D' = (b-1) D + V, V' = b V - (lambda C) D^-alpha V^(p-1).
/// Lower uses lambda, Upper uses Lambda.
Derivative scaled_rhs_S1(const EnvelopeState& s, const EnvelopeParams& params,
                         RateBound bound = RateBound::Lower);

/// Doubly rescaled borderline system at p = 3:
/// D' = (-D/(1-alpha) + V)/(tau+1), V' = V (1 - (lambda C) D^-alpha V).
Derivative log_scaled_rhs_Sb(const EnvelopeState& s, const EnvelopeParams& params,
                             RateBound bound = RateBound::Lower);

/// Solution of V' = -c V^(p-1) with V(0) = V0, c = C * phi_floor.
double closed_form_global(double p, double c_phi_floor, double V0, double t);
/// Finite extinction time V0^(2-p)/((2-p) c) for 1 < p < 2.
double extinction_time(double p, double c_phi_floor, double V0);

struct EnvelopeRunOptions {
  // pure relative control: D and V stay positive and V spans many decades on long runs
  ode::Options tolerances{0.0, 1e-9};
  RateBound bound = RateBound::Exact;
  double extinction_threshold = 1e-14;
};

/// Integrates the system selected by s0.coords (Raw: envelope_rhs, S1, Sb)
/// from s0.time to t_end. Raw runs with p < 2 terminate the dynamics with
/// status Extinct once V falls below the threshold; later samples hold the
/// rest state (D frozen, V = 0) and extinction_time holds the estimated T*.
Trajectory integrate_envelope(const EnvelopeState& s0, const EnvelopeParams& params, double t_end,
                              const Schedule& schedule, const EnvelopeRunOptions& options = {});

/// Maps a raw trajectory into S1 coordinates (tau, (t+1)^(b-1) D, (t+1)^b V).
Trajectory to_S1_coords(const Trajectory& raw, double beta_sup);

}  // namespace nlalign
