#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nlalign/core_model.hpp"
#include "nlalign/error.hpp"
#include "nlalign/ode.hpp"

namespace nlalign {

/// Coordinate system of a trajectory or region.
///   Raw: (t, D, V)
///   S1:  (tau, (t+1)^(b-1) D, (t+1)^b V) with tau = log(t+1), b = beta^*
///   Sb:  (tau, (tau+1)^-(g+1) D, (tau+1)^-g (t+1) V), g = alpha/(1-alpha)
enum class Coords { Raw, S1, Sb };

std::string to_string(Coords coords);
Coords coords_from_string(const std::string& name);

enum class RunStatus { Completed, Coalesced, Extinct };

std::string to_string(RunStatus status);

struct Snapshot {
  std::vector<double> x;  // N x d, row-major
  std::vector<double> v;
};

struct Sample {
  double t = 0.0;
  double D = 0.0;
  double V = 0.0;
  std::vector<double> momentum;  // empty for envelope runs
  std::optional<double> lyapunov;
  std::optional<Snapshot> snapshot;
};

struct Trajectory {
  std::vector<Sample> samples;
  SimParams params;
  Coords coords = Coords::Raw;
  std::string engine;  // "envelope" or "particle"
  double alignment_C = 0.0;  // constant C used by the envelope rhs; 0 for particle runs
  std::size_t agents = 0;
  std::size_t dim = 0;
  std::vector<double> masses;
  ode::Stats stats;
  ode::Options tolerances;
  RunStatus status = RunStatus::Completed;
  std::optional<double> extinction_time;

  std::vector<double> times() const;
  std::vector<double> field_D() const;
  std::vector<double> field_V() const;
};

/// Output times for a run; strictly increasing and positive-span.
class Schedule {
 public:
  static Schedule linear(double t_start, double t_end, std::size_t n);
  /// t_first, ..., t_end with `per_decade` points per factor of ten (t_end included).
  static Schedule log_spaced(double t_first, double t_end, std::size_t per_decade);
  static Schedule explicit_times(std::vector<double> times);

  const std::vector<double>& times() const { return times_; }
  bool empty() const { return times_.empty(); }

 private:
  std::vector<double> times_;
};

/// Raised when integration fails mid-run; carries the samples recorded so far.
class IntegrationFailure : public Error {
 public:
  IntegrationFailure(const std::string& what, Trajectory partial)
      : Error(ErrorCode::Integration, what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// CSV columns: t,D,V,momentum[,coords]. momentum is |sum m_i v_i| (blank for
/// envelope runs); the coords column is written for envelope runs.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_csv(const std::string& path);

/// Full-fidelity metadata (params, integrator statistics, status).
std::string trajectory_meta_json(const Trajectory& traj);

/// One CSV per snapshot-bearing sample: agent,m,x0..x{d-1},v0..v{d-1}.
/// Returns the written paths.
std::vector<std::string> write_snapshots(const Trajectory& traj, const std::string& prefix);

}  // namespace nlalign
