#include "difftune/analysis.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "difftune/error.h"

namespace difftune {

std::vector<double> normalize_drops(const std::vector<double>& drops) {
  double total = 0.0;
  for (double d : drops) total += std::max(d, 0.0);
  std::vector<double> out(drops.size(), 0.0);
  if (total <= 0.0) return out;
  for (std::size_t i = 0; i < drops.size(); ++i) out[i] = 100.0 * std::max(drops[i], 0.0) / total;
  return out;
}

PotencyReport flag_potency(const Chromosome& best, const PotencyScorer& scorer,
                           const FlagSpace& space, const ConstraintSet& constraints,
                           std::string scorer_name, std::size_t jobs) {
  check_fits(best, space);
  PotencyReport report;
  report.scorer = std::move(scorer_name);
  report.base_score = scorer(best);

  std::vector<std::size_t> on;
  for (std::size_t i = 0; i < best.genes.size(); ++i) {
    if (best.genes[i]) on.push_back(i);
  }
  std::vector<std::optional<double>> scores(on.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      std::size_t k = next.fetch_add(1);
      if (k >= on.size()) return;
      Chromosome variant = best;
      variant.genes[on[k]] = false;
      try {
        scores[k] = scorer(repair(std::move(variant), constraints));
      } catch (const std::exception&) {
        scores[k].reset();
      }
    }
  };
  const std::size_t workers = std::min(std::max<std::size_t>(jobs, 1), on.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  std::vector<PotencyEntry> all;
  std::vector<double> drops;
  for (std::size_t k = 0; k < on.size(); ++k) {
    const std::string& name = space.flags()[on[k]].name;
    if (!scores[k]) {
      report.unevaluated.push_back(name);
      continue;
    }
    double d = std::max(report.base_score - *scores[k], 0.0);
    all.push_back({name, d, 0.0});
    drops.push_back(d);
  }
  auto pct = normalize_drops(drops);
  for (std::size_t i = 0; i < all.size(); ++i) all[i].percent = pct[i];
  report.degenerate = std::none_of(drops.begin(), drops.end(), [](double d) { return d > 0.0; });

  std::stable_sort(all.begin(), all.end(),
                   [](const PotencyEntry& a, const PotencyEntry& b) { return a.raw_drop > b.raw_drop; });
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i < kPotencyTop) {
      report.entries.push_back(all[i]);
    } else {
      ++report.residual_count;
      report.residual_drop += all[i].raw_drop;
      report.residual_percent += all[i].percent;
    }
  }
  return report;
}

std::string format_potency(const PotencyReport& r) {
  std::ostringstream out;
  out << "scorer\t" << r.scorer << "\n";
  out << "base_score\t" << format_fixed6(r.base_score) << "\n";
  out << "negative drops clamped to 0\n";
  if (r.degenerate) out << "degenerate\tall drops are zero\n";
  out << "flag\traw_drop\tpotency_percent\n";
  for (const PotencyEntry& e : r.entries) {
    out << e.flag << "\t" << format_fixed6(e.raw_drop) << "\t" << format_fixed6(e.percent) << "\n";
  }
  if (r.residual_count > 0) {
    out << "other(" << r.residual_count << ")\t" << format_fixed6(r.residual_drop) << "\t"
        << format_fixed6(r.residual_percent) << "\n";
  }
  for (const std::string& f : r.unevaluated) out << f << "\tunevaluated\n";
  return out.str();
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) throw UndefinedInputError("jaccard of two empty sets");
  std::size_t common = 0;
  for (const std::string& s : a) common += b.count(s);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

double pearson(const ScoreSeries& x, const ScoreSeries& y) {
  const std::size_t n = x.values.size();
  if (n != y.values.size()) throw UndefinedInputError("pearson series differ in length");
  if (n < 2) throw UndefinedInputError("pearson needs at least two points");
  const double mx = std::accumulate(x.values.begin(), x.values.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.values.begin(), y.values.end(), 0.0) / static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x.values[i] - mx;
    const double dy = y.values[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedInputError("pearson of a constant series (zero variance)");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

PrecisionResult precision_at_1(const std::vector<Ranking>& rankings) {
  if (rankings.empty()) throw UndefinedInputError("precision@1 over no queries");
  PrecisionResult r;
  std::size_t hits = 0;
  for (const Ranking& q : rankings) {
    if (q.candidates.empty()) throw UndefinedInputError("query " + q.query + " has no candidates");
    if (q.candidates.front() == q.truth) ++hits;
    if (std::find(q.candidates.begin(), q.candidates.end(), q.truth) == q.candidates.end()) {
      r.truth_absent.push_back(q.query);
    }
  }
  r.value = static_cast<double>(hits) / static_cast<double>(rankings.size());
  return r;
}

std::string format_fixed6(double value) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, 6);
  return std::string(buf, p);
}

ReportFiles emit_report(const SessionLog& log, const FlagSpace& space,
                        const std::filesystem::path& out_dir) {
  if (log.header.catalog_digest != space.catalog_digest()) {
    throw StructuralError("catalog does not match the session's catalog digest");
  }
  std::filesystem::create_directories(out_dir);
  ReportFiles files{out_dir / "generations.csv", out_dir / "best_flags.txt", out_dir / "summary.txt"};

  std::vector<const GenerationRecord*> gens;
  std::vector<const IterationRecord*> iters;
  const EndRecord* end = nullptr;
  for (const LogRecord& rec : log.records) {
    if (auto* g = std::get_if<GenerationRecord>(&rec)) gens.push_back(g);
    else if (auto* i = std::get_if<IterationRecord>(&rec)) iters.push_back(i);
    else end = &std::get<EndRecord>(rec);
  }

  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw InfrastructureError("cannot write " + p.string());
  };

  std::string csv = "generation,best_fitness,evaluated\n";
  for (const GenerationRecord* g : gens) {
    csv += std::to_string(g->summary.index) + "," + format_fixed6(g->summary.best_fitness) + "," +
           std::to_string(g->summary.evaluated_count) + "\n";
  }
  write(files.generations_csv, csv);

  std::string best;
  if (!gens.empty()) {
    const double top = gens.back()->summary.best_fitness;
    for (const IterationRecord* r : iters) {
      if (r->fitness != top) continue;
      std::string line;
      for (const std::string& tok : decode(r->chromosome, space)) {
        if (!line.empty()) line += ' ';
        line += tok;
      }
      best += line + "\n";
    }
  }
  write(files.best_flags, best);

  std::ostringstream sum;
  sum << "generations\t" << gens.size() << "\n";
  sum << "iterations\t" << iters.size() << "\n";
  sum << "best_fitness\t" << (gens.empty() ? std::string("-") : format_fixed6(gens.back()->summary.best_fitness))
      << "\n";
  std::uint64_t wall = end ? static_cast<std::uint64_t>(end->wall.count()) : 0;
  for (const IterationRecord* r : iters) {
    if (!end) wall += static_cast<std::uint64_t>(r->duration.count());
  }
  sum << "wall_seconds\t" << format_fixed6(static_cast<double>(wall) / 1e6) << "\n";
  sum << "reason\t" << (end ? std::string(stop_reason_name(end->reason)) : std::string("incomplete")) << "\n";
  write(files.summary, sum.str());
  return files;
}

}  // namespace difftune
