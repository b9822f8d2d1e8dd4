#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "difftune/analysis.h"
#include "difftune/digest.h"
#include "difftune/error.h"
#include "difftune/ga.h"
#include "difftune/rng.h"
#include "difftune/store.h"
#include "testutil.h"

using namespace difftune;
using namespace difftune::testing;

namespace {

FlagSpace named_space(std::size_t n) {
  std::vector<FlagDescriptor> flags;
  for (std::size_t i = 0; i < n; ++i) flags.push_back({i, "-f" + std::to_string(i), std::nullopt});
  return FlagSpace({"-O0"}, flags, "analysis-space");
}

// Score 1 minus the weights of the flags that are off.
PotencyScorer weighted(std::vector<double> w) {
  return [w](const Chromosome& c) {
    double s = 1.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!c.genes[i]) s -= w[i];
    }
    return s;
  };
}

double sum_percent(const PotencyReport& r) {
  double s = r.residual_percent;
  for (const auto& e : r.entries) s += e.percent;
  return s;
}

SessionHeader header_for(const FlagSpace& space) {
  SessionHeader h;
  h.catalog_digest = space.catalog_digest();
  h.gene_count = space.size();
  h.manifest_digest = "m";
  h.ga_config = GaConfig{}.canonical();
  h.termination = TerminationCriteria{}.canonical();
  h.compressor = "none";
  h.extraction = "whole_file";
  h.baseline_digest = "b";
  return h;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("normalization") {
    auto p = normalize_drops({0.2, 0.1, 0.1});
    CHECK(p[0] == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(25.0).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(25.0).epsilon(1e-12));
    CHECK(normalize_drops({0, 0}) == std::vector<double>{0, 0});
  }

  TEST_CASE("potency examples") {
    FlagSpace space = named_space(3);
    Chromosome all(0, {true, true, true});
    PotencyReport r = flag_potency(all, weighted({0.2, 0.1, 0.1}), space, ConstraintSet{}, "test");
    REQUIRE(r.entries.size() == 3);
    CHECK(r.entries[0].flag == "-f0");
    CHECK(r.entries[0].percent == doctest::Approx(50.0).epsilon(1e-9));
    CHECK(r.entries[1].percent == doctest::Approx(25.0).epsilon(1e-9));
    CHECK(r.entries[2].percent == doctest::Approx(25.0).epsilon(1e-9));
    CHECK_FALSE(r.degenerate);
    CHECK(r.scorer == "test");

    PotencyReport z = flag_potency(all, weighted({0, 0, 0}), space, ConstraintSet{}, "test");
    CHECK(z.degenerate);
    for (const auto& e : z.entries) CHECK(e.percent == 0.0);

    FlagSpace two = named_space(2);
    PotencyReport n = flag_potency(Chromosome(0, {true, true}), weighted({0.1, -0.05}), two, ConstraintSet{}, "t");
    REQUIRE(n.entries.size() == 2);
    CHECK(n.entries[0].percent == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(n.entries[1].raw_drop == 0.0);
    CHECK(n.entries[1].percent == 0.0);
    CHECK(format_potency(n).find("clamped") != std::string::npos);
  }

  TEST_CASE("potency repairs variants and records failures") {
    FlagSpace space = named_space(3);
    ConstraintSet cs;
    cs.add_implication(1, 0);  // -f1 needs -f0
    std::vector<Chromosome> seen;
    PotencyScorer scorer = [&seen](const Chromosome& c) {
      seen.push_back(c);
      if (!c.genes[2]) throw InfrastructureError("boom");
      return static_cast<double>(c.count_on());
    };
    PotencyReport r = flag_potency(Chromosome(0, {true, true, true}), scorer, space, cs, "t");
    CHECK(std::find(seen.begin(), seen.end(), Chromosome(0, {false, false, true})) != seen.end());
    CHECK(r.unevaluated == std::vector<std::string>{"-f2"});
  }

  TEST_CASE("top ten and residual bucket") {
    FlagSpace space = named_space(14);
    std::vector<double> w;
    for (int i = 0; i < 14; ++i) w.push_back(0.01 * (i + 1));
    PotencyReport r = flag_potency(Chromosome(0, std::vector<bool>(14, true)), weighted(w), space, ConstraintSet{}, "t");
    CHECK(r.entries.size() == kPotencyTop);
    CHECK(r.entries.front().flag == "-f13");
    CHECK(r.residual_count == 4);
    CHECK(sum_percent(r) == doctest::Approx(100.0).epsilon(1e-9));
  }

  TEST_CASE("percentages sum to 100 for random drops") {
    CounterRng rng(12);
    for (int t = 0; t < 1000; ++t) {
      std::vector<double> d(1 + rng.below(30));
      for (double& x : d) x = rng.uniform() - 0.3;
      std::vector<double> clamped = d;
      for (double& x : clamped) x = std::max(x, 0.0);
      if (std::accumulate(clamped.begin(), clamped.end(), 0.0) <= 0) continue;
      auto p = normalize_drops(clamped);
      CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 100.0) <= 1e-6);
    }
  }

  TEST_CASE("jaccard") {
    CHECK(jaccard({"a", "b"}, {"a", "b"}) == 1.0);
    CHECK(jaccard({"a", "b"}, {"b", "c"}) == 1.0 / 3.0);
    CHECK(jaccard({"a"}, {"b"}) == 0.0);
    CHECK(jaccard({}, {"b"}) == 0.0);
    CHECK_THROWS_AS(jaccard({}, {}), UndefinedInputError);
    CHECK(jaccard({"a", "x", "y"}, {"x"}) == jaccard({"x"}, {"a", "x", "y"}));
  }

  TEST_CASE("pearson closed forms") {
    CHECK(std::abs(pearson({"x", {1, 2, 3, 4}}, {"y", {3, 5, 7, 9}}) - 1.0) <= 1e-9);
    CHECK(std::abs(pearson({"x", {1, 2, 3}}, {"y", {-1, -2, -3}}) + 1.0) <= 1e-9);
    CHECK(std::abs(pearson({"x", {1, 2, 3, 4}}, {"y", {1, 3, 2, 4}}) - 0.8) <= 1e-9);
    CHECK_THROWS_AS(pearson({"x", {1, 1, 1}}, {"y", {1, 2, 3}}), UndefinedInputError);
    CHECK_THROWS_AS(pearson({"x", {1}}, {"y", {1}}), UndefinedInputError);
    CHECK_THROWS_AS(pearson({"x", {1, 2}}, {"y", {1, 2, 3}}), UndefinedInputError);
  }

  TEST_CASE("pearson scale and shift") {
    CounterRng rng(21);
    for (int t = 0; t < 1000; ++t) {
      std::size_t n = 2 + rng.below(40);
      ScoreSeries x{"x", {}}, y{"y", {}};
      for (std::size_t i = 0; i < n; ++i) {
        x.values.push_back(rng.uniform());
        y.values.push_back(rng.uniform());
      }
      double a = 0.1 + 10 * rng.uniform(), b = 20 * rng.uniform() - 10;
      ScoreSeries ax = x, nx = x;
      for (double& v : ax.values) v = a * v + b;
      for (double& v : nx.values) v = -a * v + b;
      double r = pearson(x, y);
      CHECK(std::abs(r) <= 1.0);
      CHECK(std::abs(pearson(ax, y) - r) <= 1e-9);
      CHECK(std::abs(pearson(nx, y) + r) <= 1e-9);
    }
  }

  TEST_CASE("precision at 1") {
    std::vector<Ranking> all{{"q1", {"a", "b"}, "a"}, {"q2", {"c"}, "c"}};
    CHECK(precision_at_1(all).value == 1.0);
    std::vector<Ranking> half{{"q1", {"a", "b"}, "a"}, {"q2", {"b", "a"}, "a"}, {"q3", {"x"}, "x"}, {"q4", {"x"}, "y"}};
    PrecisionResult p = precision_at_1(half);
    CHECK(p.value == 0.5);
    CHECK(p.truth_absent == std::vector<std::string>{"q4"});
    std::reverse(half.begin(), half.end());
    CHECK(precision_at_1(half).value == 0.5);
    CHECK_THROWS_AS(precision_at_1({}), UndefinedInputError);
  }

  TEST_CASE("six decimal rendering rounds half to even") {
    CHECK(format_fixed6(0.0078125) == "0.007812");
    CHECK(format_fixed6(0.0234375) == "0.023438");
    CHECK(format_fixed6(-1) == "-1.000000");
    CHECK(format_fixed6(0.5) == "0.500000");
  }

  TEST_CASE("report of a plateau session") {
    FlagSpace space = named_space(6);
    TempDir dir;
    {
      SessionStore store = SessionStore::create(dir / "s.btlog", header_for(space));
      FitnessFn constant = [](const Chromosome& c) {
        return Evaluation{CompileStatus::kOk, sha256_hex(c.encode()), c.genes[0] ? 0.5 : 0.25, {}};
      };
      RunResult r = run(space, ConstraintSet{}, constant, GaConfig{}, TerminationCriteria{}, store);
      REQUIRE(r.reason == StopReason::kPlateau);
    }
    SessionLog log = read_session_log(dir / "s.btlog");
    ReportFiles f = emit_report(log, space, dir / "report");

    std::string csv = read_file(f.generations_csv);
    std::size_t rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) - 1;
    std::size_t gens = 0;
    for (const auto& rec : log.records) gens += std::holds_alternative<GenerationRecord>(rec);
    CHECK(rows == gens);
    CHECK(csv.starts_with("generation,best_fitness,evaluated\n"));

    double prev = -2;
    std::istringstream in(csv.substr(csv.find('\n') + 1));
    for (std::string line; std::getline(in, line);) {
      double v = std::stod(line.substr(line.find(',') + 1));
      CHECK(v >= prev);
      prev = v;
    }
    CHECK(read_file(f.summary).find("reason\tplateau\n") != std::string::npos);
    std::string best = read_file(f.best_flags);
    CHECK(best.starts_with("-O0 -f0"));

    FlagSpace other({"-O0"}, {{0, "-fz", std::nullopt}}, "different");
    CHECK_THROWS_AS(emit_report(log, other, dir / "r2"), StructuralError);
  }

  TEST_CASE("report of three generations") {
    FlagSpace space = named_space(4);
    TempDir dir;
    {
      SessionStore store = SessionStore::create(dir / "s.btlog", header_for(space));
      FitnessFn fit = [](const Chromosome& c) {
        return Evaluation{CompileStatus::kOk, sha256_hex(c.encode()), static_cast<double>(c.count_on()), {}};
      };
      TerminationCriteria tc;
      tc.max_iterations = 2;
      run(space, ConstraintSet{}, fit, GaConfig{}, tc, store);
    }
    ReportFiles f = emit_report(read_session_log(dir / "s.btlog"), space, dir / "r");
    std::string csv = read_file(f.generations_csv);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(read_file(f.summary).find("reason\tmax_iterations\n") != std::string::npos);
  }
}
