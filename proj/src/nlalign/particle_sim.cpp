#include "nlalign/particle_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nlalign/error.hpp"

namespace nlalign {

void ParticleState::validate() const {
  if (n < 1) throw Error(ErrorCode::Domain, "particle state needs N >= 1");
  if (d < 1) throw Error(ErrorCode::Domain, "dimension must be >= 1");
  if (x.size() != n * d || v.size() != n * d || m.size() != n) {
    throw Error(ErrorCode::Domain, "particle state arrays do not match N x d");
  }
  for (double mi : m) {
    if (!(mi > 0.0)) throw Error(ErrorCode::Domain, "particle masses must be positive");
  }
}

double ParticleState::mass() const {
  double s = 0.0;
  for (double mi : m) s += mi;
  return s;
}

std::vector<double> ParticleState::momentum() const {
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) out[a] += m[i] * v[i * d + a];
  return out;
}

ParticleState init_two_particle(double x0, double v0) {
  if (!(x0 > 0.0) || !(v0 > 0.0)) {
    throw Error(ErrorCode::Domain, "two-particle configuration needs x0 > 0 and v0 > 0");
  }
  ParticleState s;
  s.n = 2;
  s.d = 1;
  s.x = {-0.5 * x0, 0.5 * x0};
  s.v = {-0.5 * v0, 0.5 * v0};
  s.m = {1.0, 1.0};
  return s;
}

ParticleState init_random(std::size_t n, std::size_t d, double spread_x, double spread_v,
                          double total_mass, std::uint64_t seed) {
  if (n < 1 || d < 1) throw Error(ErrorCode::Domain, "need N >= 1 and d >= 1");
  if (!(spread_x >= 0.0) || !(spread_v >= 0.0) || !(total_mass > 0.0)) {
    throw Error(ErrorCode::Domain, "spreads must be >= 0 and total mass > 0");
  }
  std::mt19937_64 rng(seed);
  // explicit mapping instead of uniform_real_distribution keeps draws identical across standard libraries
  auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  ParticleState s;
  s.n = n;
  s.d = d;
  s.x.resize(n * d);
  s.v.resize(n * d);
  for (auto& xi : s.x) xi = spread_x * (unit() - 0.5);
  for (auto& vi : s.v) vi = spread_v * (unit() - 0.5);
  s.m.assign(n, total_mass / static_cast<double>(n));
  return s;
}

void alignment_accel_into(std::size_t n, std::size_t d, std::span<const double> x,
                          std::span<const double> v, std::span<const double> m,
                          const SimParams& params, Coupling coupling, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double p = params.p;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.data() + i * d;
    const double* vi = v.data() + i * d;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* xj = x.data() + j * d;
      const double* vj = v.data() + j * d;
      double r2 = 0.0, z2 = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        const double dx = xi[a] - xj[a];
        const double dv = vj[a] - vi[a];
        r2 += dx * dx;
        z2 += dv * dv;
      }
      if (z2 == 0.0) continue;
      const double phi = kernel_eval(params.kernel, std::sqrt(r2));
      // weight of z = v_j - v_i in Phi(z) = |z|^(p-2) z
      const double w = phi * (p == 2.0 ? 1.0 : std::pow(z2, 0.5 * (p - 2.0)));
      const double wi = coupling == Coupling::MassWeighted ? w * m[j] : w * inv_n;
      const double wj = coupling == Coupling::MassWeighted ? w * m[i] : w * inv_n;
      for (std::size_t a = 0; a < d; ++a) {
        const double dv = vj[a] - vi[a];
        out[i * d + a] += wi * dv;
        out[j * d + a] -= wj * dv;
      }
    }
  }
}

std::vector<double> alignment_accel(const ParticleState& state, const SimParams& params,
                                    Coupling coupling) {
  state.validate();
  std::vector<double> out(state.n * state.d);
  alignment_accel_into(state.n, state.d, state.x, state.v, state.m, params, coupling, out);
  return out;
}

Diameters diameters(std::size_t n, std::size_t d, std::span<const double> x, std::span<const double> v) {
  double D2 = 0.0, V2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double r2 = 0.0, z2 = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        const double dx = x[i * d + a] - x[j * d + a];
        const double dv = v[i * d + a] - v[j * d + a];
        r2 += dx * dx;
        z2 += dv * dv;
      }
      D2 = std::max(D2, r2);
      V2 = std::max(V2, z2);
    }
  }
  return {std::sqrt(D2), std::sqrt(V2)};
}

Diameters diameters(const ParticleState& state) {
  state.validate();
  return diameters(state.n, state.d, state.x, state.v);
}

Trajectory integrate_particles(const ParticleState& state, const SimParams& params, double t_end,
                               const Schedule& schedule, const ParticleRunOptions& options) {
  state.validate();
  params.validate();
  if (!(t_end > state.t)) throw Error(ErrorCode::Domain, "t_end must exceed the initial time");
  if (schedule.empty()) throw Error(ErrorCode::Parameter, "schedule must be nonempty");
  if (options.coupling == Coupling::MassWeighted &&
      std::fabs(state.mass() - params.total_mass) > 1e-12 * std::max(1.0, params.total_mass)) {
    throw Error(ErrorCode::Parameter, "particle masses do not sum to total_mass");
  }

  const std::size_t n = state.n, d = state.d, nd = n * d;
  Trajectory traj;
  traj.params = params;
  traj.engine = "particle";
  traj.coords = Coords::Raw;
  traj.agents = n;
  traj.dim = d;
  traj.masses = state.m;
  traj.tolerances = options.tolerances;

  auto rhs = [&](double, std::span<const double> y, std::span<double> dy) {
    std::copy(y.begin() + nd, y.end(), dy.begin());
    alignment_accel_into(n, d, y.subspan(0, nd), y.subspan(nd), state.m, params, options.coupling,
                         dy.subspan(nd));
  };

  std::vector<double> y(2 * nd);
  std::copy(state.x.begin(), state.x.end(), y.begin());
  std::copy(state.v.begin(), state.v.end(), y.begin() + nd);

  ode::DormandPrince stepper(2 * nd, rhs, options.tolerances);
  stepper.reset(state.t, y);

  auto record = [&](double t, std::span<const double> yy) {
    Sample s;
    s.t = t;
    const auto dm = diameters(n, d, yy.subspan(0, nd), yy.subspan(nd));
    s.D = dm.D;
    s.V = dm.V;
    s.momentum.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < d; ++a) s.momentum[a] += state.m[i] * yy[nd + i * d + a];
    if (options.snapshots) {
      s.snapshot = Snapshot{{yy.begin(), yy.begin() + nd}, {yy.begin() + nd, yy.end()}};
    }
    traj.samples.push_back(std::move(s));
  };
  record(state.t, y);

  ode::StopPredicate stop;
  if (params.p < 2.0) {
    // V below the absolute tolerance is solver noise, so that level counts as coalesced too
    const double threshold = std::max(options.coalescence_threshold, 1000.0 * options.tolerances.atol);
    stop = [&, threshold](double, std::span<const double> yy) {
      return diameters(n, d, yy.subspan(0, nd), yy.subspan(nd)).V < threshold;
    };
  }

  try {
    for (double ts : schedule.times()) {
      if (ts <= state.t) continue;
      const double target = std::min(ts, t_end);
      if (!stepper.advance_to(target, stop)) {
        record(stepper.t(), stepper.y());
        traj.status = RunStatus::Coalesced;
        break;
      }
      record(target, stepper.y());
      if (target >= t_end) break;
    }
    if (traj.status == RunStatus::Completed && traj.samples.back().t < t_end) {
      if (!stepper.advance_to(t_end, stop)) {
        traj.status = RunStatus::Coalesced;
      }
      record(stepper.t(), stepper.y());
    }
  } catch (const Error& e) {
    traj.stats = stepper.stats();
    throw IntegrationFailure(e.what(), std::move(traj));
  }
  traj.stats = stepper.stats();
  return traj;
}

}  // namespace nlalign
