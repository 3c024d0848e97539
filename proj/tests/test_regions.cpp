#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "nlalign/envelope.hpp"
#include "nlalign/error.hpp"
#include "nlalign/particle_sim.hpp"
#include "nlalign/regions.hpp"

using namespace nlalign;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

// Direct evaluation of the subcritical condition without logs.
bool subcritical_direct(double D0, double V0, double p, double alpha, double lc, double beta) {
  const double ab = alpha * beta;
  const double lhs = D0 * std::pow(V0, (1 - beta * (p - 2)) / (ab - 1));
  const double rhs = (ab - 1) * std::pow((beta - 1) * std::pow(lc, beta) / std::pow(ab, ab), 1 / (ab - 1));
  return lhs <= rhs;
}

Trajectory two_particle_run(double x0, double v0, double p, double alpha, double t_end) {
  const auto params = SimParams::from_kernel(p, KernelSpec::capped_power(alpha), 2.0);
  ParticleRunOptions opts;
  opts.tolerances.atol = 0.0;
  opts.tolerances.rtol = 1e-10;
  return integrate_particles(init_two_particle(x0, v0), params, t_end, Schedule::log_spaced(1e-3, t_end, 20), opts);
}

}  // namespace

TEST(RegionA, Examples) {
  const auto a = region_A_S1(1.0, 1.0, 4.0, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(*a.constant("M"), 1.0);
  EXPECT_DOUBLE_EQ(a.D.hi, 2.0);
  EXPECT_DOUBLE_EQ(a.V.hi, 1.0);
  EXPECT_EQ(a.D.lo, 0.0);
  EXPECT_EQ(a.coords, RegionCoords::S1);

  EXPECT_DOUBLE_EQ(*region_A_S1(1e-3, 10.0, 4.0, 0.0, 1.0).constant("M"), 10.0);

  const double b = 0.5 / 1.5;  // p = 4, alpha = 0.5
  const double floor = std::pow(b / (2.0 * std::pow(1 - b, 0.5)), 1.0 / 1.5);
  EXPECT_DOUBLE_EQ(*region_A_S1(1e-12, 1e-12, 4.0, 0.5, 2.0).constant("M"), floor);

  EXPECT_EQ(code_of([] { region_A_S1(1, 1, 3.0, 0.5, 1); }), ErrorCode::WrongScenario);
  EXPECT_EQ(code_of([] { region_A_S1(1, 1, 4.0, 1.5, 1); }), ErrorCode::WrongScenario);
}

TEST(RegionB, Examples) {
  EXPECT_DOUBLE_EQ(*region_B_S1_lower(1.0, 1.0, 4.0, 0.0, 1.0).constant("m"), 0.5);
  const auto tiny = region_B_S1_lower(1.0, 1e-300, 4.0, 0.0, 1.0);
  EXPECT_LE(*tiny.constant("m"), 1e-300);
  EXPECT_NEAR(*region_B_S1_lower(1e9, 1.0, 4.0, 0.0, 1.0).constant("m"), std::sqrt(0.5), 1e-15);
  EXPECT_TRUE(std::isinf(region_B_S1_lower(1.0, 1.0, 4.0, 0.0, 1.0).V.hi));
}

TEST(RegionsS1, ScaledTrajectoriesStayInside) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 10.0);
  for (double p : {3.5, 4.0, 6.0}) {
    for (double alpha : {0.0, 0.3, 0.7}) {
      for (int k = 0; k < 10; ++k) {
        const double D0 = u(rng), V0 = u(rng), lc = 0.5;
        const auto e = EnvelopeParams::power_law(p, alpha, lc);
        EnvelopeRunOptions o;
        o.bound = RateBound::Lower;
        const auto traj = integrate_envelope({D0, V0, 0.0, Coords::S1}, e, 20.0, Schedule::linear(0.0, 20.0, 200), o);
        EXPECT_TRUE(check_containment(traj, region_A_S1(D0, V0, p, alpha, lc)).contained);
        EXPECT_TRUE(check_containment(traj, region_B_S1_lower(D0, V0, p, alpha, lc)).contained);
      }
    }
  }
}

TEST(FlockingBound, Examples) {
  EXPECT_DOUBLE_EQ(flocking_bound_fat_tail(1.7, 0.0, 2.5, 0.5, 1.0), 1.7);
  EXPECT_DOUBLE_EQ(flocking_bound_fat_tail(1.0, 1.0, 2.0, 0.5, 1.0), 2.25);
  EXPECT_DOUBLE_EQ(flocking_bound_fat_tail(0.0, 1.0, 2.5, 0.0, 1.0), 2.0);
  EXPECT_EQ(code_of([] { flocking_bound_fat_tail(1, 1, 3.0, 0.5, 1); }), ErrorCode::WrongScenario);
}

TEST(FlockingBound, BoundsEnvelopeRuns) {
  for (double p : {2.0, 2.3, 2.7}) {
    for (double alpha : {0.0, 0.4, 0.9}) {
      const auto e = EnvelopeParams::power_law(p, alpha, 1.0);
      EnvelopeRunOptions o;
      o.bound = RateBound::Lower;
      const auto traj = integrate_envelope({0.5, 3.0, 0.0, Coords::Raw}, e, 1e5, Schedule::log_spaced(1e-2, 1e5, 10), o);
      const double bound = flocking_bound_fat_tail(0.5, 3.0, p, alpha, 1.0);
      for (const auto& s : traj.samples) EXPECT_LE(s.D, bound * (1 + 1e-9));
    }
  }
}

TEST(Scenario2Box, Examples) {
  EXPECT_TRUE(scenario2_box(5.0, 3.0, 2.5, 0.0, 1.0, 1.7).feasible);

  const auto box = scenario2_box(1.0, 1.0, 2.5, 0.5, 1.0, 1.5);
  EXPECT_TRUE(box.feasible);
  // D_bar = max{2, 4, (2 * 1.5^1.5 / 0.5)^4} = 256 * 1.5^6, V_bar = 1.5^1.5 * D_bar^0.75 = 3^6
  EXPECT_NEAR(box.D_bar, 2916.0, 1e-9);
  EXPECT_NEAR(box.V_bar, 729.0, 1e-9);
  EXPECT_LE(1.0 + box.V_bar / 0.5, box.D_bar);

  // large V0 puts the crossover time before t = 0; the box must still hold V0
  const auto fast = scenario2_box(0.1, 1e4, 2.5, 0.0, 1.0, 1.5);
  EXPECT_GE(fast.V_bar, 1e4);
  EXPECT_LE(0.1 + fast.V_bar / 0.5, fast.D_bar * (1 + 1e-12));

  EXPECT_FALSE(scenario2_box(1e6, 1.0, 2.5, 2.0, 1.0, 1.5).feasible);
  EXPECT_EQ(code_of([] { scenario2_box(1, 1, 2.5, 0.5, 1, 2.5); }), ErrorCode::Parameter);
  EXPECT_EQ(code_of([] { scenario2_box(1, 1, 2.5, 0.5, 1, 1.0); }), ErrorCode::Parameter);
}

TEST(Scenario2Box, FeasibleBoxContainsLowerRateRuns) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (double p : {2.3, 2.5, 2.8}) {
    for (double alpha : {0.0, 0.5, 1.5}) {
      for (int k = 0; k < 4; ++k) {
        const double D0 = alpha > 1 ? 0.01 * u(rng) : u(rng), V0 = u(rng);
        const double b_sub = 1.0 / (p - 2);
        const double hi = alpha > 0 ? std::min(b_sub, alpha < 1 ? 1.0 / alpha : b_sub) : b_sub;
        const double beta = 0.5 * (1.0 + hi);
        const auto box = scenario2_box(D0, V0, p, alpha, 1.0, beta);
        if (!box.feasible) continue;
        const auto e = EnvelopeParams::power_law(p, alpha, 1.0);
        EnvelopeRunOptions o;
        o.bound = RateBound::Lower;
        const auto traj = integrate_envelope({D0, V0, 0.0, Coords::Raw}, e, 1e4, Schedule::log_spaced(1e-3, 1e4, 10), o);
        const auto rep = check_containment(traj, scenario2_region(box, beta));
        EXPECT_TRUE(rep.contained) << "p=" << p << " alpha=" << alpha << " D0=" << D0 << " V0=" << V0 << " exit t=" << (rep.first_exit ? rep.first_exit->t : -1) << " side=" << (rep.first_exit ? int(rep.first_exit->side) : -1) << " D=" << (rep.first_exit ? rep.first_exit->D : 0) << " V=" << (rep.first_exit ? rep.first_exit->V : 0) << " Dbar=" << box.D_bar << " Vbar=" << box.V_bar;
      }
    }
  }
}

TEST(Subcritical, ThresholdExamples) {
  EXPECT_NEAR(d0_star(2.5, 1.5, 1.0), 2.0 / std::sqrt(27.0), 1e-14);
  EXPECT_LT(d0_star(2.5, 1.5, 1e-8), 1e-6);
  EXPECT_NEAR(d0_star(2.0 + 1e-5, 1.5, 2.0), std::pow(2.0, 1.0 / 1.5), 1e-3);
  EXPECT_EQ(code_of([] { d0_star(2.5, 0.5, 1.0); }), ErrorCode::WrongScenario);
}

TEST(Subcritical, SemiUnconditionalBelowThreshold) {
  const double d0 = 0.9 * d0_star(2.5, 1.5, 1.0);
  for (double V0 : {1e-3, 1.0, 1e3, 1e6}) {
    const auto r = subcritical_membership(d0, V0, 2.5, 1.5, 1.0);
    EXPECT_TRUE(r.member) << V0;
    ASSERT_TRUE(r.witness_beta.has_value());
    EXPECT_TRUE(subcritical_direct(d0, V0, 2.5, 1.5, 1.0, *r.witness_beta));
  }
}

TEST(Subcritical, LargeD0FailsForEveryBeta) {
  EXPECT_FALSE(subcritical_membership(1e3, 1.0, 2.5, 1.5, 1.0).member);
  // dense independent scan agrees
  for (int i = 1; i < 20000; ++i) {
    const double beta = 1.0 + i / 20000.0;
    EXPECT_FALSE(subcritical_direct(1e3, 1.0, 2.5, 1.5, 1.0, beta));
  }
}

TEST(Subcritical, PointOnTheBoundaryIsMember) {
  const double p = 2.5, alpha = 1.5, lc = 1.0, V0 = 50.0;
  // maximize the admissible D0 over the grid; that grid point must be the witness
  const auto grid = subcritical_beta_grid(p);
  double best = -1e300, best_beta = 0.0;
  for (double b : grid) {
    const double v = subcritical_log_threshold(p, alpha, lc, b) - subcritical_v_exponent(p, alpha, b) * std::log(V0);
    if (v > best) {
      best = v;
      best_beta = b;
    }
  }
  const auto r = subcritical_membership(std::exp(best), V0, p, alpha, lc);
  EXPECT_TRUE(r.member);
  EXPECT_EQ(*r.witness_beta, best_beta);
}

TEST(Subcritical, GridLimitMatchesThreshold) {
  const auto grid = subcritical_beta_grid(2.5);
  ASSERT_EQ(grid.size(), 512u);
  EXPECT_GT(grid.front(), 1.0);
  EXPECT_LT(grid.back(), 2.0);
  for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_GT(grid[i], grid[i - 1]);
  EXPECT_NEAR(std::exp(subcritical_log_threshold(2.5, 1.5, 1.0, grid.back())), d0_star(2.5, 1.5, 1.0), 1e-5);
}

TEST(Supercritical, Examples) {
  const double thr = supercritical_v_threshold(2.5, 2.0, 1.0);
  EXPECT_NEAR(thr, std::pow(2.0, 2.0 / 3.0) * 16.0 / 9.0, 1e-12);
  EXPECT_NEAR(thr, 2.822, 1e-3);
  EXPECT_TRUE(supercritical_membership(9.0 * 3.0, 3.0, 2.5, 2.0, 1.0));
  EXPECT_FALSE(supercritical_membership(8.9 * 3.0, 3.0, 2.5, 2.0, 1.0));
  EXPECT_FALSE(supercritical_membership(100.0, 2.8, 2.5, 2.0, 1.0));
  EXPECT_TRUE(supercritical_membership(270.0, 30.0, 2.5, 2.0, 1.0));
  EXPECT_EQ(code_of([] { supercritical_membership(1, 1, 3.5, 2.0, 1.0); }), ErrorCode::WrongScenario);
}

TEST(FloorT, Values) {
  EXPECT_FALSE(no_alignment_floor_23(1.0, 1.0, 2.5, 2.0, 1.0).has_value());
  const auto f = no_alignment_floor_23(30.0, 3.0, 2.5, 2.0, 1.0);
  ASSERT_TRUE(f.has_value());
  EXPECT_DOUBLE_EQ(f->D_floor, 0.5625 * 3.0);
  EXPECT_LT(f->V_floor, 3.0);
  EXPECT_GT(f->V_floor, 0.0);
  EXPECT_LE(f->D_floor, f->V_floor * (1 + 1e-12));
}

TEST(FloorT, FloorMinimizesTheConstraintFunction) {
  // f(D) = v0^-q D^alpha - D^(alpha-q) + q LambdaC/(alpha-1), scanned densely
  const double p = 2.5, alpha = 2.0, v0 = 3.0, q = p - 2;
  auto f = [&](double D) { return std::pow(v0, -q) * std::pow(D, alpha) - std::pow(D, alpha - q) + q / (alpha - 1); };
  double best = 1e300, arg = 0.0;
  for (int i = 1; i <= 200000; ++i) {
    const double D = 10.0 * i / 200000.0;
    if (f(D) < best) {
      best = f(D);
      arg = D;
    }
  }
  EXPECT_NEAR(no_alignment_floor_23(30.0, v0, p, alpha, 1.0)->D_floor, arg, 1e-4);
}

TEST(FloorT, TwoParticleRunsRespectFloors) {
  // unit masses: LambdaC = Lambda * m0 = 2
  const double p = 2.5, alpha = 2.0, LC = 2.0;
  const double vthr = supercritical_v_threshold(p, alpha, LC);
  for (double scale : {1.0, 1.5, 4.0}) {
    const double v0 = vthr * scale, x0 = 9.0 * v0 * scale;
    const auto floors = no_alignment_floor_23(x0, v0, p, alpha, LC);
    ASSERT_TRUE(floors.has_value());
    const auto traj = two_particle_run(x0, v0, p, alpha, 1e4);
    for (const auto& s : traj.samples) {
      EXPECT_GE(s.V, floors->V_floor - 1e-9);
      EXPECT_GE(s.D, floors->D_floor * (s.t + 1) - 1e-6);
    }
    EXPECT_TRUE(check_containment(traj, floor_region(*floors)).contained);
  }
}

TEST(FloorGeneric, RootMatchesDenseScanOracle) {
  const double p = 4.0, alpha = 2.0, gamma = 0.75;
  const auto f = no_alignment_floor(1.0, 1.0, p, alpha, 1.0, gamma);
  // sign change on a dense log grid over [1e-8, 1e8]
  double prev_D = 1e-8, prev_f = no_alignment_f(prev_D, 1.0, 1.0, p, alpha, 1.0, gamma);
  double lo = 0.0, hi = 0.0;
  for (int i = 1; i <= 1600000; ++i) {
    const double D = std::pow(10.0, -8.0 + 16.0 * i / 1600000.0);
    const double v = no_alignment_f(D, 1.0, 1.0, p, alpha, 1.0, gamma);
    if (prev_f <= 0.0 && v > 0.0) {
      lo = prev_D;
      hi = D;
      break;
    }
    prev_D = D;
    prev_f = v;
  }
  ASSERT_GT(hi, 0.0);
  EXPECT_GE(f.root, lo * (1 - 1e-12));
  EXPECT_LE(f.root, hi * (1 + 1e-12));
  const double scale = std::pow(f.root, alpha) + std::pow(f.root, alpha - 2.0 / gamma) + 2.0 / (gamma * alpha - 1);
  EXPECT_LE(std::fabs(no_alignment_f(f.root, 1.0, 1.0, p, alpha, 1.0, gamma)), 1e-10 * scale);
}

TEST(FloorGeneric, PositiveForArbitraryData) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> e(-4.0, 4.0);
  for (int k = 0; k < 200; ++k) {
    const double x0 = std::pow(10.0, e(rng)), v0 = std::pow(10.0, e(rng));
    const auto f = no_alignment_floor(x0, v0, 4.0, 2.0, 1.0, 0.75);
    EXPECT_GT(f.D_floor, 0.0);
    EXPECT_GT(f.V_floor, 0.0);
    EXPECT_LE(f.D_floor, x0);
    EXPECT_LT(f.V_floor, v0);
    EXPECT_EQ(f.linear_floor, std::min(x0, f.V_floor));
  }
}

TEST(FloorGeneric, GammaRange) {
  const auto [lo, hi] = no_alignment_gamma_range(4.0, 2.0);
  EXPECT_EQ(lo, 0.5);
  EXPECT_EQ(hi, 1.0);
  EXPECT_EQ(default_no_alignment_gamma(4.0, 2.0), 0.75);
  EXPECT_EQ(code_of([] { no_alignment_floor(1, 1, 4.0, 2.0, 1.0, 0.4); }), ErrorCode::Parameter);
  EXPECT_EQ(code_of([] { no_alignment_floor(1, 1, 4.0, 2.0, 1.0, 1.0); }), ErrorCode::Parameter);
}

TEST(FloorGeneric, TwoParticleRunsRespectFloors) {
  const double p = 4.0, alpha = 2.0, LC = 2.0, gamma = default_no_alignment_gamma(p, alpha);
  for (auto [x0, v0] : {std::pair{0.01, 3.0}, {1.0, 1.0}, {0.2, 0.05}, {5.0, 0.3}}) {
    const auto floors = no_alignment_floor(x0, v0, p, alpha, LC, gamma);
    const auto traj = two_particle_run(x0, v0, p, alpha, 1e4);
    for (const auto& s : traj.samples) {
      EXPECT_GE(s.V, floors.V_floor - 1e-9);
      EXPECT_GE(s.D, floors.linear_floor * (s.t + 1) - 1e-6);
      EXPECT_GE(s.D, floors.D_floor * std::pow(s.t + 1, gamma) - 1e-6);
    }
  }
}

TEST(Containment, InteriorAndShrunkenRegions) {
  Trajectory traj;
  traj.coords = Coords::S1;
  for (int i = 0; i < 5; ++i) {
    Sample s;
    s.t = i;
    s.D = 1.0;
    s.V = 0.5;
    traj.samples.push_back(s);
  }
  RegionSpec r;
  r.coords = RegionCoords::S1;
  r.D = {0.0, 2.0};
  r.V = {0.0, 1.0};
  EXPECT_TRUE(check_containment(traj, r).contained);

  traj.samples[3].V = 0.9;
  r.V.hi *= 0.5;
  const auto rep = check_containment(traj, r);
  EXPECT_FALSE(rep.contained);
  ASSERT_TRUE(rep.first_exit.has_value());
  EXPECT_EQ(rep.first_exit->side, Side::Top);
  EXPECT_EQ(rep.first_exit->t, 3.0);

  RegionSpec left = r;
  left.D = {1.5, 2.0};
  left.V = {0.0, 1.0};
  EXPECT_EQ(check_containment(traj, left).first_exit->side, Side::Left);
}

TEST(Containment, GrazingWithinToleranceIsNotAnExit) {
  Trajectory traj;
  traj.coords = Coords::Raw;
  traj.tolerances.atol = 1e-10;
  traj.tolerances.rtol = 1e-9;
  Sample s;
  s.t = 0.0;
  s.D = 1.0 + 5e-9;
  s.V = 1.0;
  traj.samples.push_back(s);
  RegionSpec r;
  r.D = {0.0, 1.0};
  r.V = {0.0, 2.0};
  EXPECT_TRUE(check_containment(traj, r).contained);
  traj.samples[0].D = 1.0 + 1e-6;
  EXPECT_FALSE(check_containment(traj, r).contained);
}

TEST(Containment, CoordinateMismatchIsError) {
  Trajectory traj;
  traj.coords = Coords::Sb;
  traj.samples.push_back(Sample{});
  const auto a = region_A_S1(1.0, 1.0, 4.0, 0.5, 1.0);
  EXPECT_EQ(code_of([&] { check_containment(traj, a); }), ErrorCode::Coordinates);
}

TEST(Containment, RawTrajectoryIsConvertedToRegionCoordinates) {
  const double p = 4.0, alpha = 0.5, lc = 1.0;
  const auto e = EnvelopeParams::power_law(p, alpha, lc);
  EnvelopeRunOptions o;
  o.bound = RateBound::Lower;
  const auto raw = integrate_envelope({1.0, 1.0, 0.0, Coords::Raw}, e, 1e6, Schedule::log_spaced(1e-2, 1e6, 10), o);
  EXPECT_TRUE(check_containment(raw, region_A_S1(1.0, 1.0, p, alpha, lc)).contained);
  auto shrunk = region_A_S1(1.0, 1.0, p, alpha, lc);
  shrunk.V.hi *= 0.5;
  EXPECT_FALSE(check_containment(raw, shrunk).contained);
}

TEST(RegionJson, InfiniteUpperEndIsNull) {
  const auto j = nlohmann::json::parse(region_json(region_B_S1_lower(1.0, 1.0, 4.0, 0.0, 1.0)));
  EXPECT_EQ(j["coords"], "S1");
  EXPECT_TRUE(j["D_interval"][1].is_null());
  EXPECT_DOUBLE_EQ(j["D_interval"][0].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j["constants"]["m"].get<double>(), 0.5);
}
