// Post-hoc analytics over tuning sessions.
#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "difftune/flagspace.h"
#include "difftune/store.h"

namespace difftune {

struct PotencyEntry {
  std::string flag;
  double raw_drop = 0.0;  // clamped at zero
  double percent = 0.0;
};

struct PotencyReport {
  std::string scorer;
  double base_score = 0.0;
  // At most kPotencyTop entries, highest potency first.
  std::vector<PotencyEntry> entries;
  // Flags ranked below the top entries, collapsed.
  std::size_t residual_count = 0;
  double residual_drop = 0.0;
  double residual_percent = 0.0;
  // All drops were zero; every percent is 0.
  bool degenerate = false;
  // Flags whose leave-one-out variant could not be scored.
  std::vector<std::string> unevaluated;
};

inline constexpr std::size_t kPotencyTop = 10;

// Throws when the variant cannot be scored.
using PotencyScorer = std::function<double(const Chromosome&)>;

// Percent shares of raw drops; all zeros when the drops sum to zero.
std::vector<double> normalize_drops(const std::vector<double>& drops);

// Leave-one-out attribution: each ON flag is switched off (then repaired)
// and the clamped score drop is normalized across flags. A failure scoring
// `best` itself propagates.
PotencyReport flag_potency(const Chromosome& best, const PotencyScorer& scorer,
                           const FlagSpace& space, const ConstraintSet& constraints,
                           std::string scorer_name, std::size_t jobs = 1);

std::string format_potency(const PotencyReport& report);

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

struct ScoreSeries {
  std::string label;
  std::vector<double> values;
};

double pearson(const ScoreSeries& x, const ScoreSeries& y);

struct Ranking {
  std::string query;
  std::vector<std::string> candidates;
  std::string truth;
};

struct PrecisionResult {
  double value = 0.0;
  // Queries whose true match was missing from the candidates.
  std::vector<std::string> truth_absent;
};

PrecisionResult precision_at_1(const std::vector<Ranking>& rankings);

// Fixed six-decimal rendering (round half to even).
std::string format_fixed6(double value);

struct ReportFiles {
  std::filesystem::path generations_csv;
  std::filesystem::path best_flags;
  std::filesystem::path summary;
};

// Writes generations.csv, best_flags.txt and summary.txt into out_dir.
ReportFiles emit_report(const SessionLog& log, const FlagSpace& space,
                        const std::filesystem::path& out_dir);

}  // namespace difftune
