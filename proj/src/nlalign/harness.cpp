#include "nlalign/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "nlalign/envelope.hpp"
#include "nlalign/error.hpp"
#include "nlalign/keyvalue.hpp"
#include "nlalign/particle_sim.hpp"
#include "nlalign/regions.hpp"

namespace nlalign {

std::string to_string(Engine engine) { return engine == Engine::Envelope ? "envelope" : "particle"; }

void SweepConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::Config, msg); };
  if (p_grid.empty()) fail("p_grid is empty");
  if (alpha_grid.empty()) fail("alpha_grid is empty");
  if (ics.empty()) fail("ic_set is empty");
  for (double p : p_grid) {
    if (!(p > 1.0) || !std::isfinite(p)) fail("p_grid entries must be > 1");
  }
  for (double a : alpha_grid) {
    if (!(a >= 0.0) || !std::isfinite(a)) fail("alpha_grid entries must be >= 0");
    if (kernel == KernelFamily::ConstantFloor && a != 0.0) fail("the constant kernel only admits alpha = 0");
  }
  for (const auto& ic : ics) {
    if (!(ic.D0 > 0.0) || !(ic.V0 > 0.0)) fail("initial conditions need D0 > 0 and V0 > 0");
  }
  if (!(t_end > 0.0) || !std::isfinite(t_end)) fail("t_end must be > 0");
  if (!(t_first > 0.0) || !(t_first < t_end)) fail("need 0 < t_first < t_end");
  if (samples_per_decade < 1) fail("samples_per_decade must be >= 1");
  if (!(rtol > 0.0 && rtol < 1e-2)) fail("rtol must lie in (0, 1e-2)");
  if (!(total_mass > 0.0)) fail("mass must be > 0");
  if (!(r_min > 0.0)) fail("kernel.r_min must be > 0");
  if (!(floor > 0.0)) fail("kernel.floor must be > 0");
  if (jobs < 1) fail("jobs must be >= 1");
  if (engine == Engine::Particle) {
    if (agents < 2) fail("particle sweeps need agents >= 2");
    if (dim < 1) fail("dim must be >= 1");
    if (agents == 2 && dim != 1) fail("two-agent sweeps run in one dimension");
    if (agents == 2 && total_mass != 2.0) fail("two-agent sweeps use unit masses (mass = 2)");
  }
}

namespace {

std::vector<InitialCondition> parse_ics(const std::string& text) {
  std::vector<InitialCondition> out;
  std::stringstream groups(text);
  std::string group;
  while (std::getline(groups, group, ',')) {
    std::stringstream ss(group);
    std::string a, b, extra;
    if (!(ss >> a)) continue;
    if (!(ss >> b) || (ss >> extra)) {
      throw Error(ErrorCode::Config, "ic_set entries are 'D0 V0' pairs separated by commas");
    }
    out.push_back({parse_real(a, "ic_set D0"), parse_real(b, "ic_set V0")});
  }
  return out;
}

}  // namespace

SweepConfig SweepConfig::parse(const std::string& text) {
  const KeyValueDoc doc = KeyValueDoc::parse(text);
  const std::vector<std::string> known = {"p_grid", "alpha_grid", "ic_set", "engine", "agents", "dim",
                                          "kernel", "kernel.r_min", "kernel.floor", "mass", "t_end",
                                          "t_first", "samples_per_decade", "rtol", "output_dir", "jobs",
                                          "seed", "plots"};
  const auto unknown = doc.unknown_keys(known);
  if (!unknown.empty()) throw Error(ErrorCode::Config, "unknown config key '" + unknown.front() + "'");
  if (!doc.has("p_grid")) throw Error(ErrorCode::Config, "missing required key p_grid");
  if (!doc.has("alpha_grid")) throw Error(ErrorCode::Config, "missing required key alpha_grid");

  SweepConfig c;
  c.p_grid = doc.get_doubles("p_grid");
  c.alpha_grid = doc.get_doubles("alpha_grid");
  if (doc.has("ic_set")) c.ics = parse_ics(doc.get("ic_set"));
  const std::string engine = doc.get_string("engine", "envelope");
  if (engine == "envelope") c.engine = Engine::Envelope;
  else if (engine == "particle") c.engine = Engine::Particle;
  else throw Error(ErrorCode::Config, "engine must be envelope or particle");
  auto get_count = [&](const char* key, long fallback) {
    const long v = doc.get_long(key, fallback);
    if (v < 0) throw Error(ErrorCode::Config, std::string(key) + " must be >= 0");
    return static_cast<std::size_t>(v);
  };
  c.agents = get_count("agents", 2);
  c.dim = get_count("dim", 1);
  try {
    c.kernel = kernel_family_from_string(doc.get_string("kernel", "capped_power"));
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, e.what());
  }
  c.r_min = doc.get_double("kernel.r_min", kDefaultCapRadius);
  c.floor = doc.get_double("kernel.floor", 1.0);
  c.total_mass = doc.get_double("mass", 2.0);
  c.t_end = doc.get_double("t_end", 1e6);
  c.t_first = doc.get_double("t_first", 1e-2);
  c.samples_per_decade = get_count("samples_per_decade", 20);
  c.rtol = doc.get_double("rtol", 1e-9);
  c.output_dir = doc.get_string("output_dir", "");
  c.jobs = get_count("jobs", 1);
  c.seed = static_cast<std::uint64_t>(get_count("seed", 1));
  const std::string plots = doc.get_string("plots", "false");
  if (plots == "true" || plots == "1") c.plots = true;
  else if (plots == "false" || plots == "0") c.plots = false;
  else throw Error(ErrorCode::Config, "plots must be true or false");
  c.validate();
  return c;
}

SweepConfig SweepConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

namespace {

KernelSpec make_kernel(const SweepConfig& c, double alpha) {
  switch (c.kernel) {
    case KernelFamily::ConstantFloor: return KernelSpec::constant_floor(c.floor);
    case KernelFamily::SmoothTail: return KernelSpec::smooth_tail(alpha);
    case KernelFamily::CappedPower: return KernelSpec::capped_power(alpha, c.r_min);
  }
  return KernelSpec::capped_power(alpha, c.r_min);
}

bool within(const std::optional<RateFit>& fit, double predicted, double tol) {
  return fit && std::fabs(fit->exponent - predicted) <= tol;
}

bool within_log(const std::optional<RateFit>& fit, double predicted, double tol) {
  return fit && fit->log_power && std::fabs(*fit->log_power - predicted) <= tol;
}

std::string containment_label(const ContainmentReport& r) {
  if (r.contained) return "contained";
  return "exit_" + to_string(r.first_exit->side);
}

/// Exponential decay rate from the tail of the samples with V above 1e-200.
std::optional<double> exponential_rate(const Trajectory& traj) {
  std::vector<double> t, y;
  for (const auto& s : traj.samples) {
    if (s.t > 0.0 && s.V > 1e-200) {
      t.push_back(s.t);
      y.push_back(std::log(s.V));
    }
  }
  if (t.size() < 2 * kMinFitPoints) return std::nullopt;
  const std::size_t start = t.size() / 2;
  double mt = 0.0, my = 0.0;
  const double n = static_cast<double>(t.size() - start);
  for (std::size_t i = start; i < t.size(); ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= n;
  my /= n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = start; i < t.size(); ++i) {
    stt += (t[i] - mt) * (t[i] - mt);
    sty += (t[i] - mt) * (y[i] - my);
  }
  if (!(stt > 0.0)) return std::nullopt;
  return -sty / stt;
}

}  // namespace

SweepRow run_sweep_row(const SweepConfig& config, double p, double alpha, const InitialCondition& ic,
                       std::size_t index, Trajectory* trajectory_out) {
  SweepRow row;
  row.index = index;
  row.p = p;
  row.alpha = alpha;
  row.D0 = ic.D0;
  row.V0 = ic.V0;
  try {
    row.scenario = classify_scenario(p, alpha);
  } catch (const Error& e) {
    row.status = "failed";
    row.message = e.what();
    return row;
  }

  const bool two_body = config.engine == Engine::Particle && config.agents == 2;
  const bool equality = config.engine == Engine::Envelope || two_body;

  try {
    const KernelSpec kernel = make_kernel(config, alpha);
    const SimParams sim = SimParams::from_kernel(p, kernel, config.total_mass);
    const double C = two_body ? two_particle_constant(config.total_mass) : alignment_constant(p, config.total_mass);
    const double lambdaC = sim.lambda * C;
    const double LambdaC = sim.Lambda * C;
    const Schedule schedule = Schedule::log_spaced(config.t_first, config.t_end, config.samples_per_decade);

    Trajectory traj;
    if (config.engine == Engine::Envelope) {
      EnvelopeRunOptions opts;
      opts.tolerances.rtol = config.rtol;
      traj = integrate_envelope({ic.D0, ic.V0, 0.0, Coords::Raw}, EnvelopeParams::from_sim(sim, C), config.t_end,
                                schedule, opts);
    } else {
      ParticleState state;
      if (two_body) {
        state = init_two_particle(ic.D0, ic.V0);
      } else {
        state = init_random(config.agents, config.dim, ic.D0, ic.V0, config.total_mass, config.seed + index);
        // zero-momentum frame keeps velocity components centered on the diameter scale
        const auto mom = state.momentum();
        for (std::size_t i = 0; i < state.n; ++i) {
          for (std::size_t k = 0; k < state.d; ++k) state.v[i * state.d + k] -= mom[k] / state.mass();
        }
      }
      ParticleRunOptions opts;
      opts.tolerances.atol = 0.0;
      opts.tolerances.rtol = config.rtol;
      traj = integrate_particles(state, sim, config.t_end, schedule, opts);
    }
    row.run_status = traj.status;

    bool fit_failed = false;
    auto try_fit = [&](auto&& fn) -> std::optional<RateFit> {
      try {
        return fn();
      } catch (const Error& e) {
        fit_failed = true;
        if (row.message.empty()) row.message = e.what();
        return std::nullopt;
      }
    };
    if (row.scenario.label == Scenario::S0) {
      row.exp_rate = exponential_rate(traj);
    } else {
      row.fit_V = try_fit([&] { return fit_power(traj, Field::V); });
      row.fit_D = try_fit([&] { return fit_power(traj, Field::D); });
    }
    if (row.scenario.label == Scenario::Sb) {
      row.log_fit_V = try_fit([&] { return fit_log_corrected(traj, Field::V); });
      row.log_fit_D = try_fit([&] { return fit_log_corrected(traj, Field::D); });
    }

    const ScenarioClass& sc = row.scenario;
    bool region_ok = true;
    switch (sc.label) {
      case Scenario::S0:
        row.status = row.exp_rate && *row.exp_rate > 0.0 ? "pass" : "mismatch";
        break;
      case Scenario::S1: {
        const auto a = check_containment(traj, region_A_S1(ic.D0, ic.V0, p, alpha, lambdaC));
        row.region_check = "A:" + containment_label(a);
        region_ok = a.contained;
        if (equality) {
          const auto b = check_containment(traj, region_B_S1_lower(ic.D0, ic.V0, p, alpha, LambdaC));
          row.region_check += " B:" + containment_label(b);
          region_ok = region_ok && b.contained;
        }
        row.status = within(row.fit_V, *sc.V_exponent, 0.03) && within(row.fit_D, *sc.D_exponent, 0.03) && region_ok
                         ? "pass"
                         : "mismatch";
        break;
      }
      case Scenario::S2:
      case Scenario::S3: {
        double beta = 0.0;
        if (sc.label == Scenario::S2) {
          const double hi = alpha > 0.0 ? std::min(1.0 / (p - 2.0), 1.0 / alpha) : 1.0 / (p - 2.0);
          beta = 0.5 * (1.0 + hi);
        } else {
          const auto sub = subcritical_membership(ic.D0, ic.V0, p, alpha, lambdaC);
          if (!sub.member) {
            if (supercritical_membership(ic.D0, ic.V0, p, alpha, LambdaC) && equality) {
              const auto floors = no_alignment_floor_23(ic.D0, ic.V0, p, alpha, LambdaC);
              const auto r = check_containment(traj, floor_region(*floors));
              row.region_check = "T:" + containment_label(r);
              row.status = r.contained ? "pass" : "mismatch";
            } else {
              row.status = "unresolved";
            }
            break;
          }
          beta = *sub.witness_beta;
        }
        const auto box = scenario2_box(ic.D0, ic.V0, p, alpha, lambdaC, beta);
        if (box.feasible) {
          const auto r = check_containment(traj, scenario2_region(box, beta));
          row.region_check = "box:" + containment_label(r);
          region_ok = r.contained;
        }
        row.status = within(row.fit_V, *sc.V_exponent, 0.05) && within(row.fit_D, 0.0, 0.05) && region_ok
                         ? "pass"
                         : "mismatch";
        break;
      }
      case Scenario::Sb:
        row.status = within_log(row.log_fit_V, *sc.log_power_V, 0.15) && within_log(row.log_fit_D, *sc.log_power_D, 0.2)
                         ? "pass"
                         : "mismatch";
        break;
      case Scenario::S4: {
        if (equality) {
          const auto floors = no_alignment_floor(ic.D0, ic.V0, p, alpha, LambdaC, default_no_alignment_gamma(p, alpha));
          const auto r = check_containment(traj, floor_region(floors));
          row.region_check = "floor:" + containment_label(r);
          row.status = r.contained ? "pass" : "mismatch";
        } else {
          row.status = "no_prediction";
        }
        break;
      }
      case Scenario::Boundary:
      case Scenario::OutOfRange:
        row.status = "no_prediction";
        break;
    }
    if (fit_failed && row.status == "mismatch") row.status = "failed";
    if (config.plots) row.plot_svg = trajectory_svg(traj, row.scenario);
    if (trajectory_out) *trajectory_out = std::move(traj);
  } catch (const Error& e) {
    row.status = "failed";
    row.message = e.what();
  }
  return row;
}

SweepResult run_sweep(const SweepConfig& config) {
  config.validate();
  struct Point {
    double p, alpha;
    InitialCondition ic;
  };
  std::vector<Point> points;
  for (double p : config.p_grid) {
    for (double a : config.alpha_grid) {
      for (const auto& ic : config.ics) points.push_back({p, a, ic});
    }
  }
  SweepResult result;
  result.config = config;
  result.rows.resize(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      result.rows[i] = run_sweep_row(config, points[i].p, points[i].alpha, points[i].ic, i);
    }
  };
  const std::size_t n_threads = std::min(config.jobs, points.size());
  std::vector<std::thread> threads;
  for (std::size_t k = 1; k < n_threads; ++k) threads.emplace_back(worker);
  worker();
  for (auto& th : threads) th.join();
  return result;
}

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::string fit_exponent(const std::optional<RateFit>& f) { return f ? num(f->exponent) : std::string(); }

nlohmann::ordered_json fit_to_json(const std::optional<RateFit>& f) {
  if (!f) return nullptr;
  return nlohmann::ordered_json::parse(rate_fit_json(*f));
}

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return "exponential";
  return *v;
}

}  // namespace

std::string sweep_csv(const SweepResult& result) {
  std::string out = std::string(kSweepCsvHeader) + "\n";
  for (const auto& r : result.rows) {
    const ScenarioClass& sc = r.scenario;
    std::string v_fit = r.scenario.label == Scenario::S0 ? (r.exp_rate ? "exp:" + num(*r.exp_rate) : "")
                                                         : fit_exponent(r.fit_V);
    std::string log_q = r.log_fit_V && r.log_fit_V->log_power ? num(*r.log_fit_V->log_power) : "";
    out += num(r.p) + "," + num(r.alpha) + "," + num(r.D0) + "," + num(r.V0) + "," + to_string(sc.label) + "," +
           opt_num(sc.V_exponent) + "," + v_fit + "," + opt_num(sc.D_exponent) + "," + fit_exponent(r.fit_D) +
           "," + log_q + "," + r.region_check + "," + r.status + "\n";
  }
  return out;
}

std::string sweep_json(const SweepResult& result) {
  using nlohmann::ordered_json;
  const SweepConfig& c = result.config;
  ordered_json j;
  j["config"] = {{"p_grid", c.p_grid},
                 {"alpha_grid", c.alpha_grid},
                 {"engine", to_string(c.engine)},
                 {"agents", c.agents},
                 {"dim", c.dim},
                 {"kernel", to_string(c.kernel)},
                 {"mass", c.total_mass},
                 {"t_end", c.t_end},
                 {"t_first", c.t_first},
                 {"samples_per_decade", c.samples_per_decade},
                 {"rtol", c.rtol},
                 {"seed", c.seed}};
  ordered_json ics = ordered_json::array();
  for (const auto& ic : c.ics) ics.push_back({ic.D0, ic.V0});
  j["config"]["ic_set"] = ics;
  ordered_json rows = ordered_json::array();
  for (const auto& r : result.rows) {
    ordered_json o;
    o["index"] = r.index;
    o["p"] = r.p;
    o["alpha"] = r.alpha;
    o["D0"] = r.D0;
    o["V0"] = r.V0;
    o["scenario"] = to_string(r.scenario.label);
    o["conditionality"] = to_string(r.scenario.conditionality);
    o["V_exponent_pred"] = opt_json(r.scenario.V_exponent);
    o["D_exponent_pred"] = opt_json(r.scenario.D_exponent);
    o["log_power_V_pred"] = opt_json(r.scenario.log_power_V);
    o["log_power_D_pred"] = opt_json(r.scenario.log_power_D);
    o["fit_V"] = fit_to_json(r.fit_V);
    o["fit_D"] = fit_to_json(r.fit_D);
    o["log_fit_V"] = fit_to_json(r.log_fit_V);
    o["log_fit_D"] = fit_to_json(r.log_fit_D);
    o["exp_rate"] = opt_json(r.exp_rate);
    o["region_check"] = r.region_check;
    o["run_status"] = to_string(r.run_status);
    o["status"] = r.status;
    o["message"] = r.message;
    rows.push_back(o);
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

std::vector<std::string> write_sweep_outputs(const SweepResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create output directory " + dir + ": " + ec.message());
  std::vector<std::string> written;
  auto write = [&](const std::string& name, const std::string& text) {
    const std::string path = (fs::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    out << text;
    written.push_back(path);
  };
  write("sweep.csv", sweep_csv(result));
  write("sweep.json", sweep_json(result));
  for (const auto& r : result.rows) {
    if (!r.plot_svg.empty()) write("plot_" + std::to_string(r.index) + ".svg", r.plot_svg);
  }
  return written;
}

std::string trajectory_svg(const Trajectory& traj, const ScenarioClass& scenario) {
  struct Pt {
    double x, y;
  };
  std::vector<Pt> d_pts, v_pts;
  for (const auto& s : traj.samples) {
    if (!(s.t > 0.0)) continue;
    if (s.D > 0.0) d_pts.push_back({std::log10(s.t), std::log10(s.D)});
    if (s.V > 0.0) v_pts.push_back({std::log10(s.t), std::log10(s.V)});
  }
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto* pts : {&d_pts, &v_pts}) {
    for (const auto& q : *pts) {
      xmin = std::min(xmin, q.x);
      xmax = std::max(xmax, q.x);
      ymin = std::min(ymin, q.y);
      ymax = std::max(ymax, q.y);
    }
  }
  if (xmin >= xmax) xmax = xmin + 1.0;
  if (ymin >= ymax) ymax = ymin + 1.0;
  const double W = 640, H = 420, pad = 50;
  auto sx = [&](double x) { return pad + (x - xmin) / (xmax - xmin) * (W - 2 * pad); };
  auto sy = [&](double y) { return H - pad - (y - ymin) / (ymax - ymin) * (H - 2 * pad); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << W - 2 * pad << "\" height=\"" << H - 2 * pad
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  auto polyline = [&](const std::vector<Pt>& pts, const char* color, const char* dash) {
    if (pts.empty()) return;
    o << "<polyline fill=\"none\" stroke=\"" << color << "\"" << dash << " points=\"";
    for (const auto& q : pts) o << sx(q.x) << "," << sy(q.y) << " ";
    o << "\"/>\n";
  };
  polyline(d_pts, "steelblue", "");
  polyline(v_pts, "firebrick", "");
  // guide lines through the last sample with the predicted slopes
  auto guide = [&](const std::vector<Pt>& pts, std::optional<double> slope, const char* color) {
    if (pts.empty() || !slope || !std::isfinite(*slope)) return;
    const Pt end = pts.back();
    const double x0 = std::max(xmin, end.x - 2.0);
    std::vector<Pt> line = {{x0, end.y - *slope * (end.x - x0)}, end};
    polyline(line, color, " stroke-dasharray=\"6,4\"");
  };
  guide(d_pts, scenario.D_exponent, "steelblue");
  if (scenario.V_exponent) guide(v_pts, -*scenario.V_exponent, "firebrick");
  o << "<text x=\"" << pad << "\" y=\"" << pad - 15 << "\" font-size=\"13\">" << to_string(scenario.label)
    << ": log10 D (blue), log10 V (red) vs log10 t; dashed = predicted slope</text>\n";
  o << "<text x=\"" << pad << "\" y=\"" << H - 15 << "\" font-size=\"11\">t in [" << num(std::pow(10.0, xmin))
    << ", " << num(std::pow(10.0, xmax)) << "]</text>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace nlalign
