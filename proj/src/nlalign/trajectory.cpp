#include "nlalign/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "nlalign/keyvalue.hpp"

namespace nlalign {

std::string to_string(Coords coords) {
  switch (coords) {
    case Coords::Raw: return "raw";
    case Coords::S1: return "S1";
    case Coords::Sb: return "Sb";
  }
  return "?";
}

Coords coords_from_string(const std::string& name) {
  if (name == "raw") return Coords::Raw;
  if (name == "S1") return Coords::S1;
  if (name == "Sb") return Coords::Sb;
  throw Error(ErrorCode::Coordinates, "unknown coordinate system '" + name + "'");
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Completed: return "completed";
    case RunStatus::Coalesced: return "coalesced";
    case RunStatus::Extinct: return "extinct";
  }
  return "?";
}

std::vector<double> Trajectory::times() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.t);
  return out;
}

std::vector<double> Trajectory::field_D() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.D);
  return out;
}

std::vector<double> Trajectory::field_V() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.V);
  return out;
}

Schedule Schedule::linear(double t_start, double t_end, std::size_t n) {
  if (n == 0 || !(t_end > t_start)) throw Error(ErrorCode::Parameter, "linear schedule: need n > 0 and t_end > t_start");
  Schedule s;
  for (std::size_t i = 1; i <= n; ++i) {
    s.times_.push_back(i == n ? t_end : t_start + (t_end - t_start) * static_cast<double>(i) / n);
  }
  return s;
}

Schedule Schedule::log_spaced(double t_first, double t_end, std::size_t per_decade) {
  if (!(t_first > 0.0) || !(t_end >= t_first) || per_decade == 0) {
    throw Error(ErrorCode::Parameter, "log schedule: need 0 < t_first <= t_end and per_decade > 0");
  }
  Schedule s;
  const double decades = std::log10(t_end / t_first);
  const auto n = static_cast<std::size_t>(std::ceil(decades * per_decade - 1e-9));
  for (std::size_t i = 0; i < n; ++i) {
    s.times_.push_back(t_first * std::pow(10.0, static_cast<double>(i) / per_decade));
  }
  s.times_.push_back(t_end);
  return s;
}

Schedule Schedule::explicit_times(std::vector<double> times) {
  if (times.empty()) throw Error(ErrorCode::Parameter, "schedule must be nonempty");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw Error(ErrorCode::Parameter, "schedule times must be strictly increasing");
  }
  Schedule s;
  s.times_ = std::move(times);
  return s;
}

namespace {

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  const bool envelope = traj.engine == "envelope";
  out << "t,D,V,momentum" << (envelope ? ",coords" : "") << '\n';
  out << std::setprecision(17);
  const std::string coords = to_string(traj.coords);
  for (const auto& s : traj.samples) {
    out << s.t << ',' << s.D << ',' << s.V << ',';
    if (!s.momentum.empty()) out << norm(s.momentum);
    if (envelope) out << ',' << coords;
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Io, "'" + path + "' is empty");
  const auto header = split_csv(line);
  auto column = [&](const std::string& name) -> int {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int ct = column("t"), cD = column("D"), cV = column("V"), cm = column("momentum"),
            cc = column("coords");
  if (ct < 0 || cD < 0 || cV < 0) throw Error(ErrorCode::Io, "'" + path + "': header must contain t,D,V");

  Trajectory traj;
  traj.engine = cc >= 0 ? "envelope" : "particle";
  int lineno = 1;
  bool coords_set = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    const auto where = path + ":" + std::to_string(lineno);
    if (static_cast<int>(cells.size()) < static_cast<int>(header.size())) {
      throw Error(ErrorCode::Io, where + ": too few columns");
    }
    Sample s;
    try {
      s.t = parse_real(cells[ct], "t");
      s.D = parse_real(cells[cD], "D");
      s.V = parse_real(cells[cV], "V");
      if (cm >= 0 && !cells[cm].empty()) s.momentum = {parse_real(cells[cm], "momentum")};
    } catch (const Error& e) {
      throw Error(ErrorCode::Io, where + ": " + e.what());
    }
    if (cc >= 0 && !coords_set) {
      traj.coords = coords_from_string(cells[cc]);
      coords_set = true;
    }
    if (!traj.samples.empty() && !(s.t > traj.samples.back().t)) {
      throw Error(ErrorCode::Io, where + ": times must be strictly increasing");
    }
    traj.samples.push_back(std::move(s));
  }
  return traj;
}

std::string trajectory_meta_json(const Trajectory& traj) {
  nlohmann::ordered_json j;
  const auto& p = traj.params;
  j["engine"] = traj.engine;
  j["coords"] = to_string(traj.coords);
  j["status"] = to_string(traj.status);
  if (traj.extinction_time) j["extinction_time"] = *traj.extinction_time;
  j["params"] = {{"p", p.p},           {"alpha", p.alpha}, {"lambda", p.lambda},
                 {"Lambda", p.Lambda}, {"R", p.R},         {"total_mass", p.total_mass},
                 {"kernel", {{"family", to_string(p.kernel.family)},
                             {"alpha", p.kernel.alpha},
                             {"r_min", p.kernel.r_min},
                             {"floor", p.kernel.floor}}}};
  if (traj.alignment_C > 0.0) j["alignment_C"] = traj.alignment_C;
  if (traj.agents > 0) {
    j["agents"] = traj.agents;
    j["dim"] = traj.dim;
  }
  j["integrator"] = {{"method", "dormand_prince_5_4"},
                     {"atol", traj.tolerances.atol},
                     {"rtol", traj.tolerances.rtol},
                     {"steps", traj.stats.steps},
                     {"rejected_steps", traj.stats.rejected},
                     {"rhs_evals", traj.stats.rhs_evals},
                     {"max_error_estimate", traj.stats.max_error}};
  j["samples"] = traj.samples.size();
  if (!traj.samples.empty()) {
    const auto& last = traj.samples.back();
    j["final"] = {{"t", last.t}, {"D", last.D}, {"V", last.V}};
    if (!last.momentum.empty()) j["final"]["momentum"] = last.momentum;
  }
  return j.dump(2);
}

std::vector<std::string> write_snapshots(const Trajectory& traj, const std::string& prefix) {
  std::vector<std::string> paths;
  std::size_t k = 0;
  for (const auto& s : traj.samples) {
    if (!s.snapshot) continue;
    const std::string path = prefix + "_snap_" + std::to_string(k++) + ".csv";
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
    const std::size_t d = traj.dim;
    out << "# t = " << std::setprecision(17) << s.t << '\n' << "agent,m";
    for (std::size_t a = 0; a < d; ++a) out << ",x" << a;
    for (std::size_t a = 0; a < d; ++a) out << ",v" << a;
    out << '\n';
    for (std::size_t i = 0; i < traj.agents; ++i) {
      out << i << ',' << (i < traj.masses.size() ? traj.masses[i] : 0.0);
      for (std::size_t a = 0; a < d; ++a) out << ',' << s.snapshot->x[i * d + a];
      for (std::size_t a = 0; a < d; ++a) out << ',' << s.snapshot->v[i * d + a];
      out << '\n';
    }
    paths.push_back(path);
  }
  return paths;
}

}  // namespace nlalign
