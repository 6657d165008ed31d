#include "bsa/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bsa/dynamics.hpp"

namespace bsa {

namespace {

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
  }
  CsvWriter& operator<<(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    out_ << (first_ ? "" : ",") << buf;
    first_ = false;
    return *this;
  }
  void end() {
    out_ << '\n';
    first_ = true;
  }

 private:
  std::ofstream out_;
  bool first_ = true;
};

nlohmann::json vec(const Vec2& v) { return nlohmann::json::array({v(0), v(1)}); }

}  // namespace

std::vector<std::string> trajectoryColumns(ModelKind model) {
  if (model == ModelKind::Vsa) {
    return {"t",   "theta_1", "theta_2",   "k_1",       "k_2",   "q_1",   "q_2",
            "qdot_1", "qdot_2", "u_theta_1", "u_theta_2", "u_k_1", "u_k_2", "v_tcp"};
  }
  std::vector<std::string> c = {"t",        "mode",     "theta_1", "theta_2", "psi_1",     "psi_2",     "q_1",
                                "q_2",      "psidot_1", "psidot_2", "qdot_1", "qdot_2",    "u_theta_1", "u_theta_2",
                                "v_tcp"};
  if (model == ModelKind::Friction) c.push_back("dissipation");
  return c;
}

std::vector<std::string> powerColumns() { return {"t", "P_out_1", "P_out_2", "Es_dot_1", "Es_dot_2", "P_in_1", "P_in_2"}; }

std::vector<std::string> energyColumns() {
  return {"t", "E_kin", "E_spring_1", "E_spring_2", "E_grav", "E_pot", "E_total"};
}

std::vector<std::string> eventColumns() { return {"t", "kind", "mode_before", "mode_after", "clutch"}; }

std::vector<std::string> sketchColumns() { return {"t", "elbow_x", "elbow_y", "tip_x", "tip_y"}; }

std::vector<std::string> inputColumns(OcpModel model) {
  if (model == OcpModel::Vsa) return {"t", "stage", "u_theta_1", "u_theta_2", "u_k_1", "u_k_2"};
  return {"t", "stage", "u_theta_1", "u_theta_2"};
}

std::vector<std::string> sweepEnergyColumns() { return {"t_f", "t", "E_kin", "E_pot", "v_tcp"}; }

void writeTrajectoryCsv(const std::filesystem::path& path, const Trajectory& traj) {
  CsvWriter w(path, trajectoryColumns(traj.model));
  for (const auto& s : traj.samples) {
    w << s.t;
    if (traj.model != ModelKind::Vsa) w << s.mode;
    for (Eigen::Index i = 0; i < s.x.size(); ++i) w << s.x(i);
    for (Eigen::Index i = 0; i < s.u.size(); ++i) w << s.u(i);
    w << s.v_tcp;
    if (traj.model == ModelKind::Friction) w << s.dissipation;
    w.end();
  }
}

void writePowerCsv(const std::filesystem::path& path, const Trajectory& traj) {
  CsvWriter w(path, powerColumns());
  for (const auto& s : traj.samples) {
    const PowerSample& p = s.power;
    w << s.t << p.p_out(0) << p.p_out(1) << p.es_dot(0) << p.es_dot(1) << p.p_in(0) << p.p_in(1);
    w.end();
  }
}

void writeEnergyCsv(const std::filesystem::path& path, const Trajectory& traj) {
  CsvWriter w(path, energyColumns());
  for (const auto& s : traj.samples) {
    const EnergyBreakdown& e = s.energy;
    w << s.t << e.kinetic() << e.potential_spring(0) << e.potential_spring(1) << e.potential_gravity
      << e.potential() << e.total();
    w.end();
  }
}

void writeEventsCsv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto cols = eventColumns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& e : traj.events) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", e.t);
    const std::string clutch = e.clutch >= 0 ? std::string(1, clutchName(static_cast<ClutchId>(e.clutch))) : "";
    out << buf << ',' << toString(e.kind) << ',' << e.mode_before << ',' << e.mode_after << ',' << clutch << '\n';
  }
}

void writeSketchCsv(const std::filesystem::path& path, const Trajectory& traj, const PendulumParams& p, int frames) {
  CsvWriter w(path, sketchColumns());
  if (traj.samples.empty() || frames < 1) return;
  const int q0 = traj.model == ModelKind::Vsa ? vsa_index::kQ : bsa_index::kQ;
  const double t0 = traj.samples.front().t, t1 = traj.samples.back().t;
  std::size_t i = 0;
  for (int f = 0; f < frames; ++f) {
    const double t = frames == 1 ? t1 : t0 + (t1 - t0) * f / (frames - 1);
    while (i + 1 < traj.samples.size() && traj.samples[i].t < t) ++i;
    const auto& s = traj.samples[i];
    const Vec2 q = s.x.segment<2>(q0);
    const Vec2 tip = tcpPosition<double>(q, p);
    w << s.t << p.l1 * std::sin(q(0)) << -p.l1 * std::cos(q(0)) << tip(0) << tip(1);
    w.end();
  }
}

void writeInputsCsv(const std::filesystem::path& path, const OcpSolution& sol) {
  CsvWriter w(path, inputColumns(sol.model));
  for (std::size_t s = 0; s < sol.stages.size(); ++s) {
    const auto& st = sol.stages[s];
    for (std::size_t i = 0; i < st.inputs.size(); ++i) {
      w << st.input_times[i] << static_cast<double>(s);
      for (Eigen::Index k = 0; k < st.inputs[i].size(); ++k) w << st.inputs[i](k);
      w.end();
    }
  }
}

nlohmann::json toJson(const RunReport& r, bool include_timing) {
  using nlohmann::json;
  json j;
  j["schema_version"] = 1;
  j["experiment"] = r.experiment;
  j["model"] = r.model;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["horizon"] = r.horizon;
  j["success"] = r.success;
  j["status"] = r.status;
  j["message"] = r.message;
  j["final_v_tcp"] = r.final_speed;
  j["predicted_v_tcp"] = r.predicted_speed;
  json stages = json::array();
  double start = 0.0;
  for (std::size_t i = 0; i < r.durations.size(); ++i) {
    stages.push_back({{"mode", i < r.modes.size() ? r.modes[i] : 0}, {"start", start}, {"duration", r.durations[i]}});
    start += r.durations[i];
  }
  j["stages"] = stages;
  j["T_p"] = r.durations;
  j["cost"] = r.cost;
  j["solver"] = {{"iterations", r.iterations},
                 {"starts", r.starts},
                 {"converged_starts", r.converged_starts},
                 {"max_defect", r.max_defect},
                 {"primal_infeasibility", r.primal_infeasibility},
                 {"dual_infeasibility", r.dual_infeasibility}};
  j["resimulation"] = {{"max_state_deviation", r.resimulation.max_state_deviation},
                       {"predicted_v_tcp", r.resimulation.predicted_speed},
                       {"simulated_v_tcp", r.resimulation.simulated_speed},
                       {"relative_v_tcp_deviation", r.resimulation.relative_speed_deviation}};
  j["energy"] = {{"net", r.work.netTotal()},
                 {"positive", r.work.positiveTotal()},
                 {"negative", r.work.negativeTotal()},
                 {"net_per_actuator", vec(r.work.net())},
                 {"positive_per_actuator", vec(r.work.positive)},
                 {"negative_per_actuator", vec(r.work.negative)}};
  j["potential_peak"] = {{"value", r.potential_peak.value},
                         {"time", r.potential_peak.time},
                         {"fraction_of_horizon", r.horizon > 0 ? r.potential_peak.time / r.horizon : 0.0}};
  j["exchange_cycles"] = r.exchange_cycles;
  if (r.friction) {
    const auto& f = *r.friction;
    j["friction"] = {{"ideal_switch_time", f.ideal_switch_time},
                     {"command_time", f.command_time},
                     {"ideal_v_tcp", f.ideal_speed},
                     {"v_tcp", f.speed},
                     {"v_tcp_ratio", f.speed_ratio},
                     {"ideal_peak_spring_energy_2", f.ideal_peak_spring2},
                     {"peak_spring_energy_2", f.peak_spring2},
                     {"friction_loss", f.friction_loss},
                     {"stick_slip_events", f.stick_slip_events}};
  }
  json events = json::array();
  for (const auto& e : r.events) {
    json ev = {{"t", e.t}, {"kind", toString(e.kind)}, {"mode_before", e.mode_before}, {"mode_after", e.mode_after}};
    if (e.clutch >= 0) ev["clutch"] = std::string(1, clutchName(static_cast<ClutchId>(e.clutch)));
    events.push_back(ev);
  }
  j["events"] = events;
  j["warnings"] = r.warnings;
  if (include_timing) j["timing"] = {{"wall_seconds", r.wall_seconds}};
  return j;
}

nlohmann::json toJson(const OcpSolution& sol) {
  using nlohmann::json;
  json j;
  j["model"] = toString(sol.model);
  j["status"] = nlp::toString(sol.status);
  j["message"] = sol.message;
  j["cost"] = sol.cost;
  j["iterations"] = sol.iterations;
  j["primal_infeasibility"] = sol.primal_infeasibility;
  j["dual_infeasibility"] = sol.dual_infeasibility;
  j["max_defect"] = sol.max_defect;
  j["T_p"] = sol.durations();
  json stages = json::array();
  for (const auto& st : sol.stages) {
    json inputs = json::array();
    for (const auto& u : st.inputs) inputs.push_back(std::vector<double>(u.data(), u.data() + u.size()));
    json states = json::array();
    for (const auto& x : st.node_states) states.push_back(std::vector<double>(x.data(), x.data() + x.size()));
    stages.push_back({{"mode", st.mode},
                      {"start", st.start},
                      {"duration", st.duration},
                      {"input_times", st.input_times},
                      {"inputs", inputs},
                      {"node_times", st.node_times},
                      {"node_states", states}});
  }
  j["stages"] = stages;
  j["decision"] = std::vector<double>(sol.decision.data(), sol.decision.data() + sol.decision.size());
  return j;
}

void writeJson(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string checkCsv(const std::filesystem::path& path, const std::vector<std::string>& columns) {
  std::ifstream in(path);
  if (!in) return "cannot open " + path.string();
  std::string line;
  if (!std::getline(in, line)) return "empty file";
  std::vector<std::string> header;
  {
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header != columns) return "header mismatch: '" + line + "'";
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    std::istringstream ss(line);
    std::string cell;
    std::size_t n = 0;
    while (std::getline(ss, cell, ',')) {
      ++n;
      if (cell.empty()) continue;
      char* end = nullptr;
      std::strtod(cell.c_str(), &end);
      const bool numeric = end && *end == '\0';
      // Event kinds and clutch names are the only text fields.
      if (!numeric && header[n - 1] != "kind" && header[n - 1] != "clutch") {
        return "row " + std::to_string(row) + ": non-numeric '" + cell + "' in " + header[n - 1];
      }
    }
    if (!line.empty() && line.back() == ',') ++n;
    if (n != columns.size()) return "row " + std::to_string(row) + ": " + std::to_string(n) + " fields";
  }
  return {};
}

std::string formatSummary(const nlohmann::json& s) {
  std::ostringstream out;
  auto num = [](const nlohmann::json& v, const char* fmt = "%.4f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v.is_number() ? v.get<double>() : 0.0);
    return std::string(buf);
  };
  out << "experiment   " << s.value("experiment", "?") << " (" << s.value("model", "?") << ")\n";
  out << "status       " << s.value("status", "?") << (s.value("success", false) ? "" : "  [FAILED]") << '\n';
  if (s.contains("message") && !s["message"].get<std::string>().empty()) {
    out << "message      " << s["message"].get<std::string>() << '\n';
  }
  out << "config       " << s.value("config_hash", "?") << "  seed " << s.value("seed", 0) << '\n';
  if (!s.contains("runs")) {
    out << "horizon      " << num(s.value("horizon", 0.0), "%.3f") << " s\n";
    out << "v_tcp        " << num(s.value("final_v_tcp", 0.0)) << " m/s (optimizer "
        << num(s.value("predicted_v_tcp", 0.0)) << ")\n";
  }
  if (s.contains("stages")) {
    for (const auto& st : s["stages"]) {
      out << "  stage mode " << st.value("mode", 0) << "  start " << num(st.value("start", 0.0)) << "  T "
          << num(st.value("duration", 0.0)) << " s\n";
    }
  }
  if (s.contains("energy")) {
    const auto& e = s["energy"];
    out << "energy       net " << num(e.value("net", 0.0), "%.3f") << " J  (+" << num(e.value("positive", 0.0), "%.3f")
        << " / " << num(e.value("negative", 0.0), "%.3f") << ")\n";
  }
  if (s.contains("potential_peak")) {
    const auto& p = s["potential_peak"];
    out << "E_pot peak   " << num(p.value("value", 0.0), "%.3f") << " J at " << num(p.value("time", 0.0), "%.3f")
        << " s (" << num(p.value("fraction_of_horizon", 0.0), "%.2f") << " of horizon), exchange cycles "
        << s.value("exchange_cycles", 0) << '\n';
  }
  if (s.contains("friction")) {
    const auto& f = s["friction"];
    out << "friction     v_tcp " << num(f.value("v_tcp", 0.0)) << " (" << num(100 * f.value("v_tcp_ratio", 0.0), "%.1f")
        << "% of ideal), command at " << num(f.value("command_time", 0.0), "%.3f") << " s, E_s2 peak "
        << num(f.value("peak_spring_energy_2", 0.0), "%.3f") << " J (ideal "
        << num(f.value("ideal_peak_spring_energy_2", 0.0), "%.3f") << ")\n";
  }
  if (s.contains("solver")) {
    const auto& v = s["solver"];
    out << "solver       " << v.value("iterations", 0) << " iterations, " << v.value("converged_starts", 0) << "/"
        << v.value("starts", 0) << " starts converged, max defect " << num(v.value("max_defect", 0.0), "%.2e") << '\n';
  }
  if (s.contains("runs")) {
    for (const auto& r : s["runs"]) {
      out << "  t_f " << num(r.value("horizon", 0.0), "%.2f") << "  " << r.value("status", "?") << "  v_tcp "
          << num(r.value("final_v_tcp", 0.0)) << "  E_pot peak at " << num(r["potential_peak"].value("fraction_of_horizon", 0.0), "%.2f")
          << "  cycles " << r.value("exchange_cycles", 0) << '\n';
    }
  }
  if (s.contains("timing")) out << "wall time    " << num(s["timing"].value("wall_seconds", 0.0), "%.2f") << " s\n";
  return out.str();
}

}  // namespace bsa
