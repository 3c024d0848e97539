#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlalign/core_model.hpp"
#include "nlalign/rates.hpp"
#include "nlalign/trajectory.hpp"

namespace nlalign {

enum class Engine { Envelope, Particle };

std::string to_string(Engine engine);

struct InitialCondition {
  double D0 = 1.0;  // x0 for particle runs
  double V0 = 1.0;  // v0 for particle runs
};

/// Sweep over the (p, alpha) plane. Config file keys (key = value):
///   p_grid, alpha_grid        comma/space separated reals (required)
///   ic_set                    "D0 V0, D0 V0, ..." (default "1 1")
///   engine                    envelope | particle
///   agents, dim               particle count and dimension (particle engine)
///   kernel                    capped_power | smooth_tail | constant
///   kernel.r_min, kernel.floor
///   mass                      total mass m0
///   t_end, t_first, samples_per_decade
///   rtol                      relative tolerance (absolute tolerance is 0)
///   output_dir, jobs, seed, plots
struct SweepConfig {
  std::vector<double> p_grid;
  std::vector<double> alpha_grid;
  std::vector<InitialCondition> ics{{1.0, 1.0}};
  Engine engine = Engine::Envelope;
  std::size_t agents = 2;
  std::size_t dim = 1;
  KernelFamily kernel = KernelFamily::CappedPower;
  double r_min = kDefaultCapRadius;
  double floor = 1.0;
  double total_mass = 2.0;
  double t_end = 1e6;
  double t_first = 1e-2;
  std::size_t samples_per_decade = 20;
  double rtol = 1e-9;
  std::string output_dir;
  std::size_t jobs = 1;
  std::uint64_t seed = 1;
  bool plots = false;

  /// Throws Error(Config).
  void validate() const;
  static SweepConfig parse(const std::string& text);
  static SweepConfig load(const std::string& path);
};

struct SweepRow {
  std::size_t index = 0;
  double p = 0.0;
  double alpha = 0.0;
  double D0 = 0.0;
  double V0 = 0.0;
  ScenarioClass scenario;
  std::optional<RateFit> fit_V;
  std::optional<RateFit> fit_D;
  std::optional<RateFit> log_fit_V;
  std::optional<RateFit> log_fit_D;
  std::optional<double> exp_rate;  // fitted -d log V/dt for S0
  std::string region_check = "n/a";
  std::string status;  // pass | mismatch | no_prediction | unresolved | failed
  std::string message;
  RunStatus run_status = RunStatus::Completed;
  std::string plot_svg;  // filled when config.plots is set
};

struct SweepResult {
  SweepConfig config;
  std::vector<SweepRow> rows;
};

/// Rows are ordered p-major, then alpha, then initial condition. Each row
/// is computed independently; numerical failures land in the row.
SweepResult run_sweep(const SweepConfig& config);

/// Runs a single grid point (row index seeds particle initial data).
SweepRow run_sweep_row(const SweepConfig& config, double p, double alpha, const InitialCondition& ic,
                       std::size_t index, Trajectory* trajectory_out = nullptr);

inline constexpr const char* kSweepCsvHeader =
    "p,alpha,D0,V0,scenario,V_exp_pred,V_exp_fit,D_exp_pred,D_exp_fit,log_q_fit,region_check,status";

std::string sweep_csv(const SweepResult& result);
std::string sweep_json(const SweepResult& result);

/// Writes sweep.csv and sweep.json (and plot_<row>.svg when enabled).
std::vector<std::string> write_sweep_outputs(const SweepResult& result, const std::string& dir);

/// Log-log plot of D and V with a guide line of the predicted slope.
std::string trajectory_svg(const Trajectory& traj, const ScenarioClass& scenario);

}  // namespace nlalign
