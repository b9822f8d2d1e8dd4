// Genetic search over flag chromosomes.
#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "difftune/evaluation.h"
#include "difftune/flagspace.h"
#include "difftune/rng.h"

namespace difftune {

class SessionStore;
struct IterationRecord;

struct GaConfig {
  std::size_t population_size = 20;
  double mutation_rate = 0.05;
  double crossover_rate = 0.8;
  std::size_t must_mutate_count = 1;
  double crossover_strength = 0.5;
  std::size_t elite_count = 1;
  std::uint64_t seed = 1;

  // Throws ConfigError. must_mutate_count is checked against gene_count.
  void validate(std::size_t gene_count) const;
  // Stable key=value rendering of everything but the seed.
  std::string canonical() const;
};

struct TerminationCriteria {
  std::optional<std::uint64_t> max_iterations;
  std::optional<std::chrono::milliseconds> max_wall_clock;
  double plateau_threshold = 0.0035;
  // Generations over which growth is measured; 0 disables the plateau rule.
  std::size_t plateau_window = 10;

  bool plateau_enabled() const { return plateau_window > 0; }
  // Throws ConfigError when no criterion is enabled or values are negative.
  void validate() const;
  std::string canonical() const;
};

struct GenerationSummary {
  std::uint64_t index = 0;
  double best_fitness = kFailureFloor;
  Chromosome best_chromosome;
  std::size_t evaluated_count = 0;

  bool operator==(const GenerationSummary&) const = default;
};

enum class StopReason { kMaxIterations, kWallClock, kPlateau };

std::string_view stop_reason_name(StopReason reason);
StopReason parse_stop_reason(std::string_view name);

struct StopDecision {
  std::optional<StopReason> reason;
  bool stop() const { return reason.has_value(); }
};

inline constexpr double kPlateauEpsilon = 1e-9;

StopDecision check_termination(std::span<const GenerationSummary> history,
                               const TerminationCriteria& criteria,
                               std::chrono::milliseconds elapsed);

// An evaluated population member. `order` is the sequence number of the
// record that first scored it; lower wins fitness ties.
struct Individual {
  Chromosome chromosome;
  double fitness = kFailureFloor;
  std::uint64_t order = 0;
};

// Uniform exchange: with probability crossover_rate each position (genes plus
// the base level) is swapped with probability crossover_strength.
std::pair<Chromosome, Chromosome> crossover(const Chromosome& parent_a, const Chromosome& parent_b,
                                            const GaConfig& config, CounterRng& rng);

Chromosome mutate(Chromosome individual, std::size_t level_count, const GaConfig& config,
                  CounterRng& rng);

// Two independent size-2 tournaments.
std::pair<Chromosome, Chromosome> select_parents(std::span<const Individual> population,
                                                 CounterRng& rng);

using FitnessFn = std::function<Evaluation(const Chromosome&)>;

struct RunOptions {
  // Concurrent fitness evaluations per generation.
  std::size_t jobs = 1;
  // When false, durations are logged as 0 so logs are byte-reproducible.
  bool record_timing = true;
  std::function<void(const GenerationSummary&)> on_generation;
};

struct RunResult {
  // Every record whose fitness equals the final best, in log order.
  std::vector<IterationRecord> best_records;
  std::vector<GenerationSummary> history;
  StopReason reason = StopReason::kMaxIterations;
  // fitness_fn invocations made by this call (cache misses).
  std::size_t fitness_calls = 0;
};

// Runs (or resumes) the session held by `store` until a criterion fires.
// InfrastructureError from fitness_fn aborts after persisting the records
// completed before it.
RunResult run(const FlagSpace& space, const ConstraintSet& constraints, const FitnessFn& fitness_fn,
              const GaConfig& config, const TerminationCriteria& criteria, SessionStore& store,
              const RunOptions& options = {});

}  // namespace difftune
