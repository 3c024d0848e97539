#include "nlalign/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nlalign/error.hpp"

namespace nlalign::ode {
namespace {

// Dormand & Prince (1980) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
// 5th-order weights are a7*; error weights are (5th - 4th).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

}  // namespace

DormandPrince::DormandPrince(std::size_t dim, Rhs rhs, Options options)
    : dim_(dim), rhs_(std::move(rhs)), options_(options),
      y_(dim), y_new_(dim), tmp_(dim), err_(dim),
      k1_(dim), k2_(dim), k3_(dim), k4_(dim), k5_(dim), k6_(dim), k7_(dim) {
  if (!(options_.rtol > 0.0) || options_.atol < 0.0) {
    throw Error(ErrorCode::Parameter, "integrator tolerances: need rtol > 0 and atol >= 0");
  }
}

void DormandPrince::reset(double t, std::span<const double> y) {
  if (y.size() != dim_) throw Error(ErrorCode::Domain, "state dimension mismatch");
  t_ = t;
  std::copy(y.begin(), y.end(), y_.begin());
  rhs_(t_, y_, k1_);
  ++stats_.rhs_evals;
  h_ = options_.h_init;
}

double DormandPrince::error_norm(std::span<const double> y_new) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    const double scale = options_.atol + options_.rtol * std::max(std::fabs(y_[i]), std::fabs(y_new[i]));
    if (scale == 0.0) {
      if (err_[i] != 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    const double r = err_[i] / scale;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(dim_));
}

// Hairer, Norsett & Wanner, Solving ODEs I, Sec. II.4.
double DormandPrince::initial_step(double span) {
  // components with zero error scale (y = 0 and atol = 0) carry no size information
  auto scale = [&](std::size_t i) { return options_.atol + options_.rtol * std::fabs(y_[i]); };
  double d0 = 0.0, d1 = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < dim_; ++i) {
    if (scale(i) == 0.0) continue;
    d0 += std::pow(y_[i] / scale(i), 2);
    d1 += std::pow(k1_[i] / scale(i), 2);
    ++used;
  }
  if (used == 0) return std::min(1e-6, span);
  d0 = std::sqrt(d0 / used);
  d1 = std::sqrt(d1 / used);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);
  for (std::size_t i = 0; i < dim_; ++i) tmp_[i] = y_[i] + h0 * k1_[i];
  rhs_(t_ + h0, tmp_, k2_);
  ++stats_.rhs_evals;
  double d2 = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    if (scale(i) != 0.0) d2 += std::pow((k2_[i] - k1_[i]) / scale(i), 2);
  }
  d2 = std::sqrt(d2 / used) / h0;
  const double dmax = std::max(d1, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 1.0 / 5.0);
  return std::min({100.0 * h0, h1, span});
}

bool DormandPrince::advance_to(double t_target, const StopPredicate& stop) {
  if (t_target < t_) throw Error(ErrorCode::Domain, "advance_to: target lies in the past");
  if (t_target == t_) return true;
  if (h_ <= 0.0) h_ = initial_step(t_target - t_);

  bool last_rejected = false;
  while (t_ < t_target) {
    if (stats_.steps + stats_.rejected >= options_.max_steps) {
      throw Error(ErrorCode::Integration, "step budget exhausted at t = " + std::to_string(t_));
    }
    const double remaining = t_target - t_;
    const bool clipped = h_ >= remaining * (1.0 - 1e-12);
    const double h = clipped ? remaining : h_;
    if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(t_))) {
      std::ostringstream msg;
      msg << "step size underflow (h = " << h << ") at t = " << t_;
      throw Error(ErrorCode::Integration, msg.str());
    }

    for (std::size_t i = 0; i < dim_; ++i) tmp_[i] = y_[i] + h * a21 * k1_[i];
    rhs_(t_ + c2 * h, tmp_, k2_);
    for (std::size_t i = 0; i < dim_; ++i) tmp_[i] = y_[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
    rhs_(t_ + c3 * h, tmp_, k3_);
    for (std::size_t i = 0; i < dim_; ++i)
      tmp_[i] = y_[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
    rhs_(t_ + c4 * h, tmp_, k4_);
    for (std::size_t i = 0; i < dim_; ++i)
      tmp_[i] = y_[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
    rhs_(t_ + c5 * h, tmp_, k5_);
    for (std::size_t i = 0; i < dim_; ++i)
      tmp_[i] = y_[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
    const double t_new = clipped ? t_target : t_ + h;
    rhs_(t_new, tmp_, k6_);
    for (std::size_t i = 0; i < dim_; ++i)
      y_new_[i] = y_[i] + h * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]);
    rhs_(t_new, y_new_, k7_);
    stats_.rhs_evals += 6;
    for (std::size_t i = 0; i < dim_; ++i)
      err_[i] = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);

    double err = error_norm(y_new_);
    if (!std::isfinite(err)) err = 1e10;

    if (err <= 1.0) {
      ++stats_.steps;
      stats_.max_error = std::max(stats_.max_error, err);
      t_ = t_new;
      y_.swap(y_new_);
      k1_.swap(k7_);
      double factor = err == 0.0 ? kMaxFactor : kSafety * std::pow(err, -0.2);
      factor = std::clamp(factor, kMinFactor, last_rejected ? 1.0 : kMaxFactor);
      // a clipped step says little about the natural step length
      const double proposed = h * factor;
      h_ = clipped ? std::max(h_, proposed) : proposed;
      last_rejected = false;
      if (stop && stop(t_, y_)) return false;
    } else {
      ++stats_.rejected;
      h_ = h * std::max(kMinFactor, kSafety * std::pow(err, -0.2));
      last_rejected = true;
    }
  }
  return true;
}

}  // namespace nlalign::ode
