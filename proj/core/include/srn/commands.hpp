#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "srn/box.hpp"
#include "srn/energy.hpp"
#include "srn/network.hpp"
#include "srn/run_config.hpp"

namespace srn::cli {

/// Entry point shared by the binary and the tests. args excludes the program
/// name ({"infer", "--data", ...}). Returns the process exit code.
int run(const std::vector<std::string>& args);

// Pieces reused by tests and the sweep command.

struct DatasetFrame {
  std::uint64_t frame_id = 0;
  std::string file;
  RadarPointCloud cloud;
};

std::vector<DatasetFrame> load_dataset(const std::filesystem::path& dir);
std::map<std::uint64_t, std::vector<Box3D>> load_manifest(const std::filesystem::path& path);

std::vector<Detection> run_inference(Network& net, const RunConfig& config,
                                     const std::vector<DatasetFrame>& frames, Mode mode,
                                     bool use_bti, double r, int steps, OpLedger& ledger);

void write_detections_csv(const std::filesystem::path& path, const std::vector<Detection>& dets);
std::vector<Detection> read_detections_csv(const std::filesystem::path& path);
void write_energy_csv(const std::filesystem::path& path, const OpLedger& ledger,
                      const EnergyModel& model, CountingMode mode);

}  // namespace srn::cli
