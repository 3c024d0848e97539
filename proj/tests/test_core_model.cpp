#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "nlalign/core_model.hpp"
#include "nlalign/error.hpp"

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

double norm(const std::vector<double>& z) {
  double s = 0.0;
  for (double x : z) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST(KernelEval, Examples) {
  EXPECT_EQ(kernel_eval(KernelSpec::constant_floor(1.0), 7.3), 1.0);
  EXPECT_EQ(kernel_eval(KernelSpec::smooth_tail(1.0), 0.0), 1.0);
  EXPECT_DOUBLE_EQ(kernel_eval(KernelSpec::capped_power(0.5, 1e-6), 4.0), 0.5);
}

TEST(KernelEval, CapIsFiniteAtOrigin) {
  const auto k = KernelSpec::capped_power(2.0, 1e-3);
  EXPECT_DOUBLE_EQ(kernel_eval(k, 0.0), 1e6);
  EXPECT_DOUBLE_EQ(kernel_eval(k, 1e-4), 1e6);
}

TEST(KernelEval, NegativeRadiusIsDomainError) {
  EXPECT_EQ(code_of([] { kernel_eval(KernelSpec::smooth_tail(1.0), -1.0); }), ErrorCode::Domain);
}

TEST(KernelEval, NonincreasingOnIncreasingSamples) {
  const std::vector<KernelSpec> kernels = {KernelSpec::constant_floor(0.3), KernelSpec::smooth_tail(0.5),
                                           KernelSpec::smooth_tail(2.5), KernelSpec::capped_power(0.7),
                                           KernelSpec::capped_power(3.0, 1e-2)};
  for (const auto& k : kernels) {
    double prev = kernel_eval(k, 0.0);
    for (int i = 1; i < 2000; ++i) {
      const double r = 1e-8 * std::pow(10.0, i * 16.0 / 2000.0);
      const double phi = kernel_eval(k, r);
      EXPECT_LE(phi, prev);
      EXPECT_GE(phi, 0.0);
      prev = phi;
    }
  }
}

TEST(TailConstants, Examples) {
  const auto cp = tail_constants(KernelSpec::capped_power(1.7, 1e-4));
  EXPECT_EQ(cp.lambda, 1.0);
  EXPECT_EQ(cp.Lambda, 1.0);
  EXPECT_EQ(cp.R, 1e-4);

  const auto s1 = tail_constants(KernelSpec::smooth_tail(1.0));
  EXPECT_NEAR(s1.lambda, 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(s1.Lambda, 1.0);
  EXPECT_EQ(s1.R, 1.0);

  const auto s2 = tail_constants(KernelSpec::smooth_tail(2.0));
  EXPECT_NEAR(s2.lambda, 0.5, 1e-15);
  EXPECT_EQ(s2.Lambda, 1.0);
}

TEST(TailConstants, ConstantKernelHasNoTail) {
  EXPECT_EQ(code_of([] { tail_constants(KernelSpec::constant_floor(1.0)); }), ErrorCode::NoTailClass);
}

TEST(TailConstants, SandwichHoldsBySampling) {
  for (double a : {0.0, 0.3, 1.0, 2.0, 4.5}) {
    for (const auto& k : {KernelSpec::smooth_tail(a), KernelSpec::capped_power(a)}) {
      const auto tc = tail_constants(k);
      // independent sampling on [R, 1e6 R]
      for (int i = 0; i <= 1000; ++i) {
        const double r = tc.R * std::pow(10.0, 6.0 * i / 1000.0);
        const double phi = kernel_eval(k, r), pw = std::pow(r, -a);
        EXPECT_GE(phi, tc.lambda * pw * (1 - 1e-13));
        EXPECT_LE(phi, tc.Lambda * pw * (1 + 1e-13));
      }
      EXPECT_TRUE(tail_sandwich_holds(k, a, tc));
    }
  }
}

TEST(TailConstants, TooLargeLambdaFailsSandwich) {
  const auto k = KernelSpec::smooth_tail(1.0);
  EXPECT_FALSE(tail_sandwich_holds(k, 1.0, {0.9, 1.0, 1.0}));
}

TEST(SimParams, Validation) {
  auto good = SimParams::from_kernel(2.5, KernelSpec::capped_power(0.5), 2.0);
  EXPECT_NO_THROW(good.validate());
  auto bad = good;
  bad.p = 1.0;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::Parameter);
  bad = good;
  bad.Lambda = 0.5;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::Parameter);
  bad = good;
  bad.total_mass = 0.0;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::Parameter);
  bad = good;
  bad.lambda = 1.5;
  bad.Lambda = 2.0;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::Parameter);
}

TEST(PhiP, Examples) {
  EXPECT_EQ(phi_p(std::vector<double>{0.0, 0.0}, 1.5), (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(phi_p(std::vector<double>{3.0, -4.0}, 2.0), (std::vector<double>{3.0, -4.0}));
  EXPECT_EQ(phi_p(std::vector<double>{2.0}, 3.0), (std::vector<double>{4.0}));
  EXPECT_EQ(code_of([] { phi_p(std::vector<double>{1.0}, 1.0); }), ErrorCode::Parameter);
}

TEST(PhiP, VectorNormUsesEuclideanLength) {
  // |z| = 5, p = 3: Phi(z) = 5 z
  const auto out = phi_p(std::vector<double>{3.0, 4.0}, 3.0);
  EXPECT_DOUBLE_EQ(out[0], 15.0);
  EXPECT_DOUBLE_EQ(out[1], 20.0);
}

TEST(PhiP, OddAndMonotoneAlongRays) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (double p : {1.2, 1.5, 2.0, 2.5, 3.0, 4.0, 7.0}) {
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> z = {u(rng), u(rng), u(rng)};
      std::vector<double> mz = {-z[0], -z[1], -z[2]};
      const auto a = phi_p(z, p), b = phi_p(mz, p);
      for (int k = 0; k < 3; ++k) EXPECT_EQ(a[k], -b[k]);

      const double n = norm(z);
      std::vector<double> e = {z[0] / n, z[1] / n, z[2] / n};
      double s = std::fabs(u(rng)), t = s + std::fabs(u(rng));
      std::vector<double> se = {s * e[0], s * e[1], s * e[2]}, te = {t * e[0], t * e[1], t * e[2]};
      const auto ps = phi_p(se, p), pt = phi_p(te, p);
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += (pt[k] - ps[k]) * e[k];
      EXPECT_GE(dot, -1e-12);
    }
  }
}

TEST(Dissipation, Examples) {
  const std::vector<double> a = {0.7}, c = {5.0};
  EXPECT_EQ(pairwise_dissipation_holds(a, a, a, 2.5), DissipationCheck::Holds);
  // equality at the midpoint for p = 2: (a-b)(Phi(c-a) - Phi(c-b)) = 2 (-1 - 1) = -4
  EXPECT_EQ(pairwise_dissipation_holds(std::vector<double>{1.0}, std::vector<double>{-1.0},
                                       std::vector<double>{0.0}, 2.0),
            DissipationCheck::Holds);
  EXPECT_EQ(pairwise_dissipation_holds(std::vector<double>{1.0}, std::vector<double>{-1.0}, c, 2.0),
            DissipationCheck::NotAdmissible);
}

TEST(Dissipation, MidpointIsTightForEveryP) {
  for (double p : {2.0, 2.5, 3.0, 4.0}) {
    const double a = 1.0, b = -1.0, c = 0.0;
    const double lhs = (a - b) * (phi_p_scalar(c - a, p) - phi_p_scalar(c - b, p));
    EXPECT_NEAR(lhs, -std::pow(2.0, 2.0 - p) * std::pow(2.0, p), 1e-12);
  }
}

TEST(Dissipation, RandomAdmissibleTriples) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double p : {2.0, 2.5, 3.0, 4.0}) {
    int checked = 0;
    while (checked < 20000) {
      std::vector<double> a(3), b(3), c(3);
      for (int k = 0; k < 3; ++k) {
        a[k] = 2 * u(rng);
        b[k] = 2 * u(rng);
      }
      // c drawn from the lens |c-a| <= |a-b|, |c-b| <= |a-b| by rejection
      for (int k = 0; k < 3; ++k) c[k] = 0.5 * (a[k] + b[k]) + 2 * u(rng);
      const auto r = pairwise_dissipation_holds(a, b, c, p);
      if (r == DissipationCheck::NotAdmissible) continue;
      EXPECT_EQ(r, DissipationCheck::Holds);
      ++checked;
    }
  }
}

TEST(Dissipation, FailsBelowPEqualsTwo) {
  // c = a: -|a-b|^p exceeds the claimed bound -2^(2-p)|a-b|^p when p < 2
  const std::vector<double> a = {1.0}, b = {-1.0};
  EXPECT_EQ(pairwise_dissipation_holds(a, b, a, 1.5), DissipationCheck::Violated);
}

TEST(ParamsFormat, RoundTrip) {
  const auto params = SimParams::from_kernel(2.75, KernelSpec::smooth_tail(1.3), 3.5);
  const auto back = parse_params(format_params(params));
  EXPECT_EQ(back.p, params.p);
  EXPECT_EQ(back.alpha, params.alpha);
  EXPECT_EQ(back.lambda, params.lambda);
  EXPECT_EQ(back.Lambda, params.Lambda);
  EXPECT_EQ(back.R, params.R);
  EXPECT_EQ(back.total_mass, params.total_mass);
  EXPECT_EQ(back.kernel.family, KernelFamily::SmoothTail);
  EXPECT_EQ(back.kernel.alpha, 1.3);
}

TEST(ParamsFormat, FillsTailConstantsAndRejectsUnknownKeys) {
  const auto params = parse_params("p = 3\nkernel.family = capped_power\nkernel.alpha = 0.5\n");
  EXPECT_EQ(params.alpha, 0.5);
  EXPECT_EQ(params.lambda, 1.0);
  EXPECT_EQ(params.R, kDefaultCapRadius);
  EXPECT_EQ(code_of([] { parse_params("p = 3\nlamda = 2\n"); }), ErrorCode::Config);
  EXPECT_EQ(code_of([] { parse_params("p = 0.5\n"); }), ErrorCode::Parameter);
}
