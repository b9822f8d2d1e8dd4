// End-to-end session operations shared by the command-line tool and tests.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "difftune/analysis.h"
#include "difftune/catalog.h"
#include "difftune/config.h"
#include "difftune/fitness.h"
#include "difftune/ga.h"
#include "difftune/store.h"

namespace difftune {

struct SessionSetup {
  SessionConfig config;
  Catalog catalog;
  Chromosome baseline_chromosome;
  CodeSection baseline;
  SessionHeader header;
};

// Loads the catalog, checks the GA settings and builds the baseline.
// A baseline that fails to build is an InfrastructureError.
SessionSetup prepare_session(const SessionConfig& config);

struct ExportedBinary {
  std::filesystem::path binary;
  std::filesystem::path flags;
};

struct TuneOutcome {
  RunResult run;
  std::vector<ExportedBinary> exported;
  bool resumed = false;
};

// Creates or resumes the session log at `session` and runs the search.
// Progress lines go to `progress` when non-null.
TuneOutcome tune(const SessionConfig& config, const std::filesystem::path& session,
                 std::size_t jobs, std::ostream* progress);

enum class PotencyScorerKind { kNcd, kBinhunt };

// Leave-one-out potency of the last best-fitness record in the session.
PotencyReport session_potency(const SessionConfig& config, const std::filesystem::path& session,
                              PotencyScorerKind scorer, std::size_t jobs);

}  // namespace difftune
