#include "nlalign/nlalign.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <map>
#include <memory>
#include <string>

#include <json.hpp>

#include "nlalign/envelope.hpp"
#include "nlalign/error.hpp"
#include "nlalign/harness.hpp"
#include "nlalign/particle_sim.hpp"
#include "nlalign/rates.hpp"
#include "nlalign/regions.hpp"
#include "nlalign/trajectory.hpp"

struct nla_trajectory {
  nlalign::Trajectory traj;
};

namespace {

using nlohmann::ordered_json;
using namespace nlalign;

thread_local std::string g_last_error;

template <class F>
nla_status guard(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return NLA_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<nla_status>(static_cast<int>(e.code()));
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NLA_ERR_INTERNAL;
  }
}

nla_status null_argument(const char* name) {
  g_last_error = std::string("null argument: ") + name;
  return NLA_ERR_NULL_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

KernelSpec to_kernel(const nla_model& m) {
  switch (m.kernel) {
    case NLA_KERNEL_CONSTANT: return KernelSpec::constant_floor(m.floor);
    case NLA_KERNEL_SMOOTH_TAIL: return KernelSpec::smooth_tail(m.alpha);
    case NLA_KERNEL_CAPPED_POWER: return KernelSpec::capped_power(m.alpha, m.r_min > 0.0 ? m.r_min : kDefaultCapRadius);
  }
  throw Error(ErrorCode::Parameter, "unknown kernel family");
}

SimParams to_params(const nla_model& m) {
  SimParams params = SimParams::from_kernel(m.p, to_kernel(m), m.total_mass);
  if (m.lambda > 0.0) params.lambda = m.lambda;
  if (m.Lambda > 0.0) params.Lambda = m.Lambda;
  if (m.R > 0.0) params.R = m.R;
  params.validate();
  return params;
}

Schedule raw_schedule(const nla_run_config& c) {
  return Schedule::log_spaced(c.t_first, c.t_end, c.samples_per_decade);
}

ordered_json parse(const std::string& text) { return ordered_json::parse(text); }

ordered_json report_json(const ContainmentReport& r) {
  ordered_json j;
  j["contained"] = r.contained;
  j["samples_checked"] = r.samples_checked;
  if (r.first_exit) {
    j["exit"] = {{"t", r.first_exit->t},
                 {"side", to_string(r.first_exit->side)},
                 {"D", r.first_exit->D},
                 {"V", r.first_exit->V}};
  } else {
    j["exit"] = nullptr;
  }
  return j;
}

ordered_json floor23_json(double x0, double v0, double p, double alpha, double LambdaC) {
  const auto floors = no_alignment_floor_23(x0, v0, p, alpha, LambdaC);
  if (!floors) return nullptr;
  ordered_json j;
  j["D_floor"] = floors->D_floor;
  j["V_floor"] = floors->V_floor;
  j["region"] = parse(region_json(floor_region(*floors)));
  return j;
}

ordered_json regions_document(double p, double alpha, double lambdaC, double LambdaC, double D0, double V0) {
  if (!(lambdaC > 0.0) || !(LambdaC >= lambdaC)) {
    throw Error(ErrorCode::Parameter, "need 0 < lambdaC <= LambdaC");
  }
  const ScenarioClass sc = classify_scenario(p, alpha);
  const bool data = D0 > 0.0 && V0 > 0.0;
  ordered_json j;
  j["p"] = p;
  j["alpha"] = alpha;
  j["lambdaC"] = lambdaC;
  j["LambdaC"] = LambdaC;
  j["scenario"] = to_string(sc.label);
  if (data) j["initial"] = {{"D0", D0}, {"V0", V0}};
  ordered_json th = ordered_json::object();
  ordered_json regions = ordered_json::object();

  const bool fat = alpha < 1.0;
  if (p > 3.0 && fat) {
    th["beta_sup"] = (1.0 - alpha) / (p - 2.0 - alpha);
    if (data) {
      regions["A"] = parse(region_json(region_A_S1(D0, V0, p, alpha, lambdaC)));
      regions["B"] = parse(region_json(region_B_S1_lower(D0, V0, p, alpha, LambdaC)));
    }
  }
  if (p >= 2.0 && p < 3.0 && fat && data) {
    th["flocking_bound"] = flocking_bound_fat_tail(D0, V0, p, alpha, lambdaC);
  }
  if (p > 2.0 && p < 3.0) {
    const double b_sub = 1.0 / (p - 2.0);
    th["beta_sub"] = b_sub;
    if (fat && data) {
      const double hi = alpha > 0.0 ? std::min(b_sub, 1.0 / alpha) : b_sub;
      const double beta = 0.5 * (1.0 + hi);
      const auto box = scenario2_box(D0, V0, p, alpha, lambdaC, beta);
      ordered_json b = {{"beta", beta}, {"feasible", box.feasible}};
      if (box.feasible) b["region"] = parse(region_json(scenario2_region(box, beta)));
      regions["scenario2_box"] = b;
    }
    if (alpha > 1.0) {
      th["D0_star"] = d0_star(p, alpha, lambdaC);
      th["supercritical_v0"] = supercritical_v_threshold(p, alpha, LambdaC);
      if (data) {
        const auto sub = subcritical_membership(D0, V0, p, alpha, lambdaC);
        ordered_json s = {{"member", sub.member}};
        s["witness_beta"] = sub.witness_beta ? ordered_json(*sub.witness_beta) : ordered_json(nullptr);
        if (sub.member) {
          const auto box = scenario2_box(D0, V0, p, alpha, lambdaC, *sub.witness_beta);
          s["box_feasible"] = box.feasible;
          if (box.feasible) s["region"] = parse(region_json(scenario2_region(box, *sub.witness_beta)));
        }
        regions["subcritical"] = s;
        regions["supercritical"] = {{"member", supercritical_membership(D0, V0, p, alpha, LambdaC)},
                                    {"floors", floor23_json(D0, V0, p, alpha, LambdaC)}};
      }
    }
  }
  if (p > 3.0 && alpha > 1.0) {
    const auto [lo, hi] = no_alignment_gamma_range(p, alpha);
    th["gamma_range"] = {lo, hi};
    th["gamma"] = default_no_alignment_gamma(p, alpha);
    if (data) {
      const auto f = no_alignment_floor(D0, V0, p, alpha, LambdaC, default_no_alignment_gamma(p, alpha));
      regions["floors"] = {{"gamma", f.gamma},          {"root", f.root},
                           {"D_floor", f.D_floor},      {"V_floor", f.V_floor},
                           {"linear_floor", f.linear_floor},
                           {"region", parse(region_json(floor_region(f)))}};
    }
  }
  j["thresholds"] = th;
  j["regions"] = regions;
  return j;
}

ordered_json check_document(const Trajectory& traj, const std::string& region, double p, double alpha,
                            double lambdaC, double LambdaC, double D0, double V0, double beta) {
  ordered_json j;
  j["region"] = region;
  if (region == "A") {
    j["report"] = report_json(check_containment(traj, region_A_S1(D0, V0, p, alpha, lambdaC)));
  } else if (region == "B") {
    j["report"] = report_json(check_containment(traj, region_B_S1_lower(D0, V0, p, alpha, LambdaC)));
  } else if (region == "box") {
    if (!(beta > 0.0)) {
      const auto sub = subcritical_membership(D0, V0, p, alpha, lambdaC);
      if (!sub.member) throw Error(ErrorCode::WrongScenario, "initial data is not subcritical; pass beta");
      beta = *sub.witness_beta;
    }
    const auto box = scenario2_box(D0, V0, p, alpha, lambdaC, beta);
    j["beta"] = beta;
    j["feasible"] = box.feasible;
    if (box.feasible) j["report"] = report_json(check_containment(traj, scenario2_region(box, beta)));
  } else if (region == "floor") {
    if (p > 2.0 && p < 3.0) {
      const auto floors = no_alignment_floor_23(D0, V0, p, alpha, LambdaC);
      if (!floors) throw Error(ErrorCode::WrongScenario, "initial data is not supercritical");
      j["report"] = report_json(check_containment(traj, floor_region(*floors)));
    } else {
      const auto f = no_alignment_floor(D0, V0, p, alpha, LambdaC, default_no_alignment_gamma(p, alpha));
      j["report"] = report_json(check_containment(traj, floor_region(f)));
    }
  } else if (region == "lyapunov") {
    const auto s = lyapunov_series(traj, p, alpha, lambdaC, D0);
    j["monotone"] = s.monotone;
    j["tolerance"] = s.tolerance;
    j["E0"] = s.E.empty() ? 0.0 : s.E.front();
    j["E_end"] = s.E.empty() ? 0.0 : s.E.back();
    j["first_increase"] = s.first_increase ? ordered_json(*s.first_increase) : ordered_json(nullptr);
  } else {
    throw Error(ErrorCode::Parameter, "unknown region '" + region + "' (A, B, box, floor, lyapunov)");
  }
  return j;
}

}  // namespace

extern "C" {

const char* nla_last_error(void) { return g_last_error.c_str(); }

const char* nla_status_name(nla_status status) {
  switch (status) {
    case NLA_OK: return "ok";
    case NLA_ERR_DOMAIN: return "domain";
    case NLA_ERR_PARAMETER: return "parameter";
    case NLA_ERR_WRONG_SCENARIO: return "wrong_scenario";
    case NLA_ERR_SINGULAR: return "singular";
    case NLA_ERR_NO_TAIL_CLASS: return "no_tail_class";
    case NLA_ERR_INTEGRATION: return "integration";
    case NLA_ERR_CONFIG: return "config";
    case NLA_ERR_COORDINATES: return "coordinates";
    case NLA_ERR_IO: return "io";
    case NLA_ERR_FIT: return "fit";
    case NLA_ERR_NULL_ARGUMENT: return "null_argument";
    case NLA_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* nla_version(void) { return "1.0.0"; }

void nla_string_free(char* s) { std::free(s); }

void nla_model_init(nla_model* m) {
  if (!m) return;
  m->p = 2.0;
  m->kernel = NLA_KERNEL_CAPPED_POWER;
  m->alpha = 0.0;
  m->r_min = kDefaultCapRadius;
  m->floor = 1.0;
  m->total_mass = 2.0;
  m->lambda = 0.0;
  m->Lambda = 0.0;
  m->R = 0.0;
}

void nla_run_config_init(nla_run_config* c) {
  if (!c) return;
  c->t_end = 1e3;
  c->t_first = 1e-2;
  c->samples_per_decade = 20;
  c->atol = 0.0;
  c->rtol = 1e-9;
}

nla_status nla_model_constants(const nla_model* model, int two_particle, double* lambdaC, double* LambdaC) {
  if (!model) return null_argument("model");
  if (!lambdaC) return null_argument("lambdaC");
  if (!LambdaC) return null_argument("LambdaC");
  return guard([&] {
    const SimParams params = to_params(*model);
    const double C = two_particle ? two_particle_constant(params.total_mass) : alignment_constant(params.p, params.total_mass);
    *lambdaC = params.lambda * C;
    *LambdaC = params.Lambda * C;
  });
}

nla_status nla_simulate(const nla_model* model, size_t agents, size_t dim, double x0, double v0, uint64_t seed,
                        const nla_run_config* config, nla_trajectory** out) {
  if (!model) return null_argument("model");
  if (!config) return null_argument("config");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guard([&] {
    const SimParams params = to_params(*model);
    const ParticleState state = agents == 2 && dim == 1
                                    ? init_two_particle(x0, v0)
                                    : init_random(agents, dim, x0, v0, model->total_mass, seed);
    ParticleRunOptions opts;
    opts.tolerances.atol = config->atol;
    opts.tolerances.rtol = config->rtol;
    auto handle = std::make_unique<nla_trajectory>();
    handle->traj = integrate_particles(state, params, config->t_end, raw_schedule(*config), opts);
    *out = handle.release();
  });
}

nla_status nla_envelope(const nla_model* model, double C, nla_rate_bound bound, nla_coords coords, double D0,
                        double V0, const nla_run_config* config, nla_trajectory** out) {
  if (!model) return null_argument("model");
  if (!config) return null_argument("config");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guard([&] {
    const SimParams params = to_params(*model);
    const double c = C > 0.0 ? C : alignment_constant(params.p, params.total_mass);
    const EnvelopeParams env = EnvelopeParams::from_sim(params, c);
    EnvelopeRunOptions opts;
    opts.tolerances.atol = config->atol;
    opts.tolerances.rtol = config->rtol;
    opts.bound = static_cast<RateBound>(bound);
    auto handle = std::make_unique<nla_trajectory>();
    if (coords == NLA_COORDS_RAW) {
      handle->traj = integrate_envelope({D0, V0, 0.0, Coords::Raw}, env, config->t_end, raw_schedule(*config), opts);
    } else {
      const double tau_end = std::log1p(config->t_end);
      const std::size_t n = raw_schedule(*config).times().size();
      const Coords cs = coords == NLA_COORDS_S1 ? Coords::S1 : Coords::Sb;
      if (opts.bound == RateBound::Exact) opts.bound = RateBound::Lower;
      handle->traj = integrate_envelope({D0, V0, 0.0, cs}, env, tau_end, Schedule::linear(0.0, tau_end, n), opts);
    }
    *out = handle.release();
  });
}

void nla_trajectory_free(nla_trajectory* traj) { delete traj; }

nla_status nla_trajectory_size(const nla_trajectory* traj, size_t* n) {
  if (!traj) return null_argument("traj");
  if (!n) return null_argument("n");
  *n = traj->traj.samples.size();
  g_last_error.clear();
  return NLA_OK;
}

nla_status nla_trajectory_sample(const nla_trajectory* traj, size_t index, nla_sample* out) {
  if (!traj) return null_argument("traj");
  if (!out) return null_argument("out");
  return guard([&] {
    if (index >= traj->traj.samples.size()) throw Error(ErrorCode::Domain, "sample index out of range");
    const Sample& s = traj->traj.samples[index];
    *out = {s.t, s.D, s.V};
  });
}

nla_status nla_trajectory_coords(const nla_trajectory* traj, nla_coords* out) {
  if (!traj) return null_argument("traj");
  if (!out) return null_argument("out");
  switch (traj->traj.coords) {
    case Coords::Raw: *out = NLA_COORDS_RAW; break;
    case Coords::S1: *out = NLA_COORDS_S1; break;
    case Coords::Sb: *out = NLA_COORDS_SB; break;
  }
  g_last_error.clear();
  return NLA_OK;
}

nla_status nla_trajectory_write(const nla_trajectory* traj, const char* csv_path, const char* meta_path) {
  if (!traj) return null_argument("traj");
  if (!csv_path) return null_argument("csv_path");
  return guard([&] {
    write_trajectory_csv(traj->traj, csv_path);
    if (meta_path) {
      std::FILE* f = std::fopen(meta_path, "w");
      if (!f) throw Error(ErrorCode::Io, std::string("cannot write ") + meta_path);
      const std::string meta = trajectory_meta_json(traj->traj);
      const bool ok = std::fwrite(meta.data(), 1, meta.size(), f) == meta.size() && std::fputc('\n', f) != EOF;
      std::fclose(f);
      if (!ok) throw Error(ErrorCode::Io, std::string("short write to ") + meta_path);
    }
  });
}

nla_status nla_trajectory_read(const char* csv_path, nla_trajectory** out) {
  if (!csv_path) return null_argument("csv_path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guard([&] {
    auto handle = std::make_unique<nla_trajectory>();
    handle->traj = read_trajectory_csv(csv_path);
    *out = handle.release();
  });
}

nla_status nla_classify_json(double p, double alpha, char** json_out) {
  if (!json_out) return null_argument("json_out");
  *json_out = nullptr;
  return guard([&] { *json_out = dup_string(scenario_json(classify_scenario(p, alpha), p, alpha)); });
}

nla_status nla_regions_json(double p, double alpha, double lambdaC, double LambdaC, double D0, double V0,
                            char** json_out) {
  if (!json_out) return null_argument("json_out");
  *json_out = nullptr;
  return guard([&] { *json_out = dup_string(regions_document(p, alpha, lambdaC, LambdaC, D0, V0).dump(2)); });
}

nla_status nla_fit_json(const nla_trajectory* traj, nla_field field, int log_corrected, double window_lo,
                        double window_hi, char** json_out) {
  if (!traj) return null_argument("traj");
  if (!json_out) return null_argument("json_out");
  *json_out = nullptr;
  return guard([&] {
    std::optional<FitWindow> window;
    if (window_lo > 0.0 && window_hi > 0.0) window = FitWindow{window_lo, window_hi};
    const Field f = field == NLA_FIELD_D ? Field::D : Field::V;
    const RateFit fit = log_corrected ? fit_log_corrected(traj->traj, f, window) : fit_power(traj->traj, f, window);
    *json_out = dup_string(rate_fit_json(fit));
  });
}

nla_status nla_check_json(const nla_trajectory* traj, const char* region, double p, double alpha, double lambdaC,
                          double LambdaC, double D0, double V0, double beta, char** json_out) {
  if (!traj) return null_argument("traj");
  if (!region) return null_argument("region");
  if (!json_out) return null_argument("json_out");
  *json_out = nullptr;
  return guard([&] {
    *json_out = dup_string(check_document(traj->traj, region, p, alpha, lambdaC, LambdaC, D0, V0, beta).dump(2));
  });
}

nla_status nla_sweep(const char* config_text, const char* output_dir, size_t jobs, char** summary_json) {
  if (!config_text) return null_argument("config_text");
  if (!summary_json) return null_argument("summary_json");
  *summary_json = nullptr;
  return guard([&] {
    SweepConfig config = SweepConfig::parse(config_text);
    if (output_dir) config.output_dir = output_dir;
    if (jobs > 0) config.jobs = jobs;
    const SweepResult result = run_sweep(config);
    ordered_json j;
    j["rows"] = result.rows.size();
    std::map<std::string, std::size_t> counts;
    for (const auto& row : result.rows) ++counts[row.status];
    j["status_counts"] = counts;
    ordered_json files = ordered_json::array();
    if (!config.output_dir.empty()) {
      for (const auto& path : write_sweep_outputs(result, config.output_dir)) files.push_back(path);
    }
    j["files"] = files;
    j["csv"] = sweep_csv(result);
    *summary_json = dup_string(j.dump(2));
  });
}

}  // extern "C"
