#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "dynasty/io.hpp"

namespace dynasty {

struct CliFlags {
  std::filesystem::path out_dir = ".";
  std::optional<double> alpha;
  bool finite_n = false;  // trap: insert a real agent instead of the mean-field probe
  std::optional<std::filesystem::path> table;
  std::optional<std::filesystem::path> jumps;
  std::optional<double> anchor_y;
  std::optional<double> anchor_t;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitCounterexample = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

// Runs one subcommand and writes its artifacts under flags.out_dir.
int run_subcommand(const std::string& name, const ExperimentConfig& config, const CliFlags& flags,
                   std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace dynasty
