#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <thread>

#include <json.hpp>

#include "nlalign/nlalign.h"

namespace {

std::string take(char* s) {
  std::string out(s ? s : "");
  nla_string_free(s);
  return out;
}

nla_model model(double p, double alpha) {
  nla_model m;
  nla_model_init(&m);
  m.p = p;
  m.alpha = alpha;
  return m;
}

}  // namespace

TEST(CApi, ClassifyJson) {
  char* out = nullptr;
  ASSERT_EQ(nla_classify_json(4.0, 0.5, &out), NLA_OK);
  const auto j = nlohmann::json::parse(take(out));
  EXPECT_EQ(j["label"], "S1");
  EXPECT_NEAR(j["V_exponent"].get<double>(), 1.0 / 3.0, 1e-15);
  EXPECT_STREQ(nla_last_error(), "");
}

TEST(CApi, ErrorsCarryCodeAndMessage) {
  char* out = nullptr;
  EXPECT_EQ(nla_classify_json(0.5, 0.5, &out), NLA_ERR_PARAMETER);
  EXPECT_EQ(out, nullptr);
  EXPECT_NE(std::string(nla_last_error()).find("p must be > 1"), std::string::npos);
  EXPECT_EQ(nla_classify_json(4.0, 0.5, nullptr), NLA_ERR_NULL_ARGUMENT);
  EXPECT_STREQ(nla_status_name(NLA_ERR_WRONG_SCENARIO), "wrong_scenario");
}

TEST(CApi, LastErrorIsThreadLocal) {
  char* out = nullptr;
  EXPECT_EQ(nla_classify_json(0.5, 0.5, &out), NLA_ERR_PARAMETER);
  std::string other;
  std::thread([&] { other = nla_last_error(); }).join();
  EXPECT_EQ(other, "");
  EXPECT_STRNE(nla_last_error(), "");
}

TEST(CApi, RegionsJson) {
  char* out = nullptr;
  ASSERT_EQ(nla_regions_json(2.5, 1.5, 1.0, 1.0, 0.0, 0.0, &out), NLA_OK);
  const auto j = nlohmann::json::parse(take(out));
  EXPECT_NEAR(j["thresholds"]["D0_star"].get<double>(), 2.0 / std::sqrt(27.0), 1e-12);

  ASSERT_EQ(nla_regions_json(4.0, 0.0, 1.0, 1.0, 1.0, 1.0, &out), NLA_OK);
  const auto a = nlohmann::json::parse(take(out));
  EXPECT_DOUBLE_EQ(a["regions"]["A"]["constants"]["M"].get<double>(), 1.0);
  EXPECT_EQ(nla_regions_json(4.0, 0.0, 1.0, 0.5, 1.0, 1.0, &out), NLA_ERR_PARAMETER);
}

TEST(CApi, EnvelopeRunAndFit) {
  const nla_model m = model(4.0, 0.5);
  nla_run_config c;
  nla_run_config_init(&c);
  c.t_end = 1e6;
  nla_trajectory* traj = nullptr;
  ASSERT_EQ(nla_envelope(&m, 0.0, NLA_BOUND_EXACT, NLA_COORDS_RAW, 1.0, 1.0, &c, &traj), NLA_OK);
  std::size_t n = 0;
  ASSERT_EQ(nla_trajectory_size(traj, &n), NLA_OK);
  EXPECT_EQ(n, 162u);  // t = 0 plus 20 per decade on [1e-2, 1e6]
  nla_sample s{};
  ASSERT_EQ(nla_trajectory_sample(traj, n - 1, &s), NLA_OK);
  EXPECT_EQ(s.t, 1e6);
  EXPECT_EQ(nla_trajectory_sample(traj, n, &s), NLA_ERR_DOMAIN);

  char* out = nullptr;
  ASSERT_EQ(nla_fit_json(traj, NLA_FIELD_V, 0, 1e3, 1e6, &out), NLA_OK);
  EXPECT_NEAR(nlohmann::json::parse(take(out))["exponent"].get<double>(), 1.0 / 3.0, 0.03);
  nla_trajectory_free(traj);
}

TEST(CApi, TrajectoryRoundTrip) {
  const nla_model m = model(2.5, 0.5);
  nla_run_config c;
  nla_run_config_init(&c);
  c.t_end = 10.0;
  nla_trajectory* traj = nullptr;
  ASSERT_EQ(nla_simulate(&m, 2, 1, 1.0, 1.0, 1, &c, &traj), NLA_OK);
  const auto dir = std::filesystem::temp_directory_path() / "nlalign_capi_test";
  std::filesystem::create_directories(dir);
  const std::string csv = (dir / "run_traj.csv").string(), meta = (dir / "run_meta.json").string();
  ASSERT_EQ(nla_trajectory_write(traj, csv.c_str(), meta.c_str()), NLA_OK);
  EXPECT_TRUE(std::filesystem::exists(meta));

  nla_trajectory* back = nullptr;
  ASSERT_EQ(nla_trajectory_read(csv.c_str(), &back), NLA_OK);
  std::size_t n1 = 0, n2 = 0;
  nla_trajectory_size(traj, &n1);
  nla_trajectory_size(back, &n2);
  ASSERT_EQ(n1, n2);
  for (std::size_t i = 0; i < n1; ++i) {
    nla_sample a{}, b{};
    nla_trajectory_sample(traj, i, &a);
    nla_trajectory_sample(back, i, &b);
    EXPECT_EQ(a.t, b.t);
    EXPECT_EQ(a.D, b.D);
    EXPECT_EQ(a.V, b.V);
  }
  char* out = nullptr;
  ASSERT_EQ(nla_check_json(back, "lyapunov", 2.5, 0.5, 2.0, 2.0, 1.0, 1.0, 0.0, &out), NLA_OK);
  EXPECT_TRUE(nlohmann::json::parse(take(out))["monotone"].get<bool>());
  EXPECT_EQ(nla_check_json(back, "nowhere", 2.5, 0.5, 2.0, 2.0, 1.0, 1.0, 0.0, &out), NLA_ERR_PARAMETER);
  EXPECT_EQ(nla_trajectory_read((dir / "missing.csv").string().c_str(), &back), NLA_ERR_IO);
  nla_trajectory_free(traj);
  std::filesystem::remove_all(dir);
}

TEST(CApi, RescaledEnvelopeMatchesRegion) {
  const nla_model m = model(4.0, 0.5);
  nla_run_config c;
  nla_run_config_init(&c);
  c.t_end = 1e4;
  nla_trajectory* traj = nullptr;
  ASSERT_EQ(nla_envelope(&m, 1.0, NLA_BOUND_LOWER, NLA_COORDS_S1, 1.0, 1.0, &c, &traj), NLA_OK);
  nla_coords coords{};
  nla_trajectory_coords(traj, &coords);
  EXPECT_EQ(coords, NLA_COORDS_S1);
  char* out = nullptr;
  ASSERT_EQ(nla_check_json(traj, "A", 4.0, 0.5, 1.0, 1.0, 1.0, 1.0, 0.0, &out), NLA_OK);
  EXPECT_TRUE(nlohmann::json::parse(take(out))["report"]["contained"].get<bool>());
  ASSERT_EQ(nla_check_json(traj, "box", 4.0, 0.5, 1.0, 1.0, 1.0, 1.0, 1.5, &out), NLA_ERR_WRONG_SCENARIO);
  nla_trajectory_free(traj);
}

TEST(CApi, SweepAndConfigErrors) {
  char* out = nullptr;
  ASSERT_EQ(nla_sweep("p_grid = 4\nalpha_grid = 0.5\n", nullptr, 1, &out), NLA_OK);
  const auto j = nlohmann::json::parse(take(out));
  EXPECT_EQ(j["rows"], 1);
  EXPECT_EQ(j["status_counts"]["pass"], 1);
  EXPECT_EQ(nla_sweep("p_grid = 4\nalpha_grid =\n", nullptr, 1, &out), NLA_ERR_CONFIG);
}

TEST(CApi, ModelConstants) {
  nla_model m = model(3.0, 0.5);
  m.kernel = NLA_KERNEL_SMOOTH_TAIL;
  double lc = 0.0, Lc = 0.0;
  ASSERT_EQ(nla_model_constants(&m, 0, &lc, &Lc), NLA_OK);
  EXPECT_NEAR(lc, std::pow(2.0, -0.25), 1e-15);  // C = 2^(2-3) * 2 = 1
  EXPECT_EQ(Lc, 1.0);
  ASSERT_EQ(nla_model_constants(&m, 1, &lc, &Lc), NLA_OK);
  EXPECT_EQ(Lc, 2.0);
  m.p = 0.9;
  EXPECT_EQ(nla_model_constants(&m, 0, &lc, &Lc), NLA_ERR_PARAMETER);
}
