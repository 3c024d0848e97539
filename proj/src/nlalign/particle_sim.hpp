#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nlalign/core_model.hpp"
#include "nlalign/ode.hpp"
#include "nlalign/trajectory.hpp"

namespace nlalign {

/// Mass-weighted coupling sums m_j phi Phi(v_j - v_i); UniformMean is the
/// classical 1/N average (masses ignored).
enum class Coupling { MassWeighted, UniformMean };

struct ParticleState {
  double t = 0.0;
  std::size_t n = 0;
  std::size_t d = 1;
  std::vector<double> x;  // n x d, row-major
  std::vector<double> v;  // n x d, row-major
  std::vector<double> m;  // n

  /// Throws Error(Domain) when shapes disagree, N < 1, or a mass is not positive.
  void validate() const;
  double mass() const;
  std::vector<double> momentum() const;
};

/// Unit masses at -+x0/2 moving apart with velocities -+v0/2 (d = 1, total mass 2).
ParticleState init_two_particle(double x0, double v0);

/// N agents with positions uniform in [-spread_x/2, spread_x/2]^d, velocities
/// uniform in [-spread_v/2, spread_v/2]^d, and equal masses total_mass/N.
ParticleState init_random(std::size_t n, std::size_t d, double spread_x, double spread_v,
                          double total_mass, std::uint64_t seed);

/// Pair loop over i < j in fixed order; each pair is evaluated once and its
/// two opposite contributions applied, so results are bitwise reproducible.
void alignment_accel_into(std::size_t n, std::size_t d, std::span<const double> x,
                          std::span<const double> v, std::span<const double> m,
                          const SimParams& params, Coupling coupling, std::span<double> out);

std::vector<double> alignment_accel(const ParticleState& state, const SimParams& params,
                                    Coupling coupling = Coupling::MassWeighted);

struct Diameters {
  double D = 0.0;
  double V = 0.0;
};

/// Exact O(N^2) maxima of pairwise position and velocity distances.
Diameters diameters(const ParticleState& state);
Diameters diameters(std::size_t n, std::size_t d, std::span<const double> x, std::span<const double> v);

struct ParticleRunOptions {
  ode::Options tolerances{};
  Coupling coupling = Coupling::MassWeighted;
  bool snapshots = false;
  double coalescence_threshold = 1e-14;
};

/// Integrates x' = v, v' = alignment_accel from state.t to t_end, recording
/// (t, D, V, momentum) at state.t and at every schedule time in (state.t, t_end].
/// For p < 2 the run stops with status Coalesced once V drops below
/// max(coalescence_threshold, 1000 atol). Throws IntegrationFailure with the partial trajectory.
Trajectory integrate_particles(const ParticleState& state, const SimParams& params, double t_end,
                               const Schedule& schedule, const ParticleRunOptions& options = {});

/// Velocity-diameter rate constant of the exact two-particle reduction:
/// V' = -two_particle_constant(m0) phi(D) V^(p-1) with m0 the total mass.
inline double two_particle_constant(double total_mass) { return total_mass; }

}  // namespace nlalign
