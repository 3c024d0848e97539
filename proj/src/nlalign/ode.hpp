#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace nlalign::ode {

struct Options {
  double atol = 1e-10;
  double rtol = 1e-9;
  double h_init = 0.0;  // 0 selects the initial step automatically
  std::size_t max_steps = 50'000'000;
};

struct Stats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
  double max_error = 0.0;  // largest accepted scaled error estimate
};

using Rhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;
using StopPredicate = std::function<bool(double t, std::span<const double> y)>;

/// Embedded Dormand-Prince 5(4) pair with FSAL and elementary step-size
/// control. The stepper lands exactly on every target passed to advance_to,
/// so long runs can be sampled on a log-spaced grid without interpolation.
class DormandPrince {
 public:
  DormandPrince(std::size_t dim, Rhs rhs, Options options = {});

  void reset(double t, std::span<const double> y);

  /// Integrates up to t_target. Returns false if `stop` fired after an
  /// accepted step (the state is left at that step). Throws
  /// Error(Integration) on step-size underflow or exhausted step budget.
  bool advance_to(double t_target, const StopPredicate& stop = {});

  double t() const { return t_; }
  std::span<const double> y() const { return y_; }
  const Stats& stats() const { return stats_; }
  const Options& options() const { return options_; }

 private:
  double initial_step(double direction_span);
  double error_norm(std::span<const double> y_new) const;

  std::size_t dim_;
  Rhs rhs_;
  Options options_;
  Stats stats_;
  double t_ = 0.0;
  double h_ = 0.0;
  std::vector<double> y_, y_new_, tmp_, err_;
  std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_;
};

}  // namespace nlalign::ode
