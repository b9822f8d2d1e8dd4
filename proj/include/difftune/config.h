// Session configuration file (INI sections).
//
//   [build]   compiler, args, sources, output, timeout_ms, workdir, env
//   [flags]   catalog
//   [ga]      population_size, mutation_rate, crossover_rate,
//             must_mutate_count, crossover_strength, elite_count, seed
//   [stop]    max_iterations, max_wall_clock_ms, plateau_threshold, plateau_window
//   [fitness] extraction, compressor, baseline
//   [log]     timing, sync
//
// List values are whitespace-separated. Relative paths resolve against the
// config file's directory.
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "difftune/compressor.h"
#include "difftune/driver.h"
#include "difftune/elf.h"
#include "difftune/ga.h"

namespace difftune {

struct SessionConfig {
  BuildManifest build;
  std::filesystem::path catalog;
  GaConfig ga;
  TerminationCriteria stop;
  ExtractionMode extraction = ExtractionMode::kElfText;
  CompressorId compressor;
  // Level token followed by flag names; empty means the first level with
  // every flag off ("-O0" when the catalog has it).
  std::vector<std::string> baseline;
  bool record_timing = true;
  bool sync = false;
};

// Throws ConfigError (unknown sections or keys, bad values, missing paths)
// or ParseError for malformed syntax.
SessionConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
SessionConfig load_config(const std::filesystem::path& path);

// Baseline chromosome named by config.baseline, repaired.
Chromosome baseline_chromosome(const SessionConfig& config, const FlagSpace& space,
                               const ConstraintSet& constraints);

}  // namespace difftune
