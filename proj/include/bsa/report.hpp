#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsa/experiment.hpp"

namespace bsa {

/// Header of each CSV artifact. Trajectory columns depend on the model.
std::vector<std::string> trajectoryColumns(ModelKind model);
std::vector<std::string> powerColumns();
std::vector<std::string> energyColumns();
std::vector<std::string> eventColumns();
std::vector<std::string> sketchColumns();
std::vector<std::string> inputColumns(OcpModel model);
std::vector<std::string> sweepEnergyColumns();

void writeTrajectoryCsv(const std::filesystem::path& path, const Trajectory& traj);
/// t,P_out_1,P_out_2,Es_dot_1,Es_dot_2,P_in_1,P_in_2
void writePowerCsv(const std::filesystem::path& path, const Trajectory& traj);
void writeEnergyCsv(const std::filesystem::path& path, const Trajectory& traj);
void writeEventsCsv(const std::filesystem::path& path, const Trajectory& traj);
/// Link positions at `frames` evenly spaced times.
void writeSketchCsv(const std::filesystem::path& path, const Trajectory& traj, const PendulumParams& p,
                    int frames = 12);
void writeInputsCsv(const std::filesystem::path& path, const OcpSolution& sol);

nlohmann::json toJson(const RunReport& report, bool include_timing = true);
nlohmann::json toJson(const OcpSolution& sol);
void writeJson(const std::filesystem::path& path, const nlohmann::json& j);

/// Empty when the file's header equals `columns` and every row has that many
/// numeric fields, otherwise a description of the first mismatch.
std::string checkCsv(const std::filesystem::path& path, const std::vector<std::string>& columns);

/// Human-readable rendering of a summary JSON (the `show` verb).
std::string formatSummary(const nlohmann::json& summary);

}  // namespace bsa
