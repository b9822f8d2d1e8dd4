// Normalized compression distance and the baseline-relative fitness.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "difftune/compressor.h"
#include "difftune/elf.h"
#include "difftune/evaluation.h"
#include "difftune/flagspace.h"

namespace difftune {

struct NcdScore {
  double value = 0.0;
};

// Upper bound accepted for NCD values from real compressors (1 + overhead).
inline constexpr double kNcdCeiling = 1.1;

// (C(x.y) - min(C(x), C(y))) / max(C(x), C(y)) with x.y the plain
// concatenation. Not symmetrized and not clamped.
NcdScore ncd(const CodeSection& x, const CodeSection& y, const CompressorId& compressor);

// ncd(x, y) for each y, compressing x once.
std::vector<NcdScore> ncd_row(const CodeSection& x, std::span<const CodeSection> ys,
                              const CompressorId& compressor);

// NCD against a fixed section whose compressed length is computed once.
class BaselineScorer {
 public:
  BaselineScorer(CodeSection baseline, CompressorId compressor);

  NcdScore score(std::span<const std::uint8_t> candidate) const;
  NcdScore score(const CodeSection& candidate) const { return score(candidate.bytes); }

  const CodeSection& baseline() const { return baseline_; }
  const CompressorId& compressor() const { return compressor_; }
  std::size_t baseline_compressed_len() const { return baseline_len_; }

 private:
  CodeSection baseline_;
  CompressorId compressor_;
  std::size_t baseline_len_;
};

// What a compile backend hands back to the fitness function.
struct BuildOutput {
  CompileStatus status = CompileStatus::kOk;
  std::vector<std::uint8_t> binary;  // meaningful iff status == kOk
  std::chrono::microseconds duration{0};
};

using CompileFn = std::function<BuildOutput(const Chromosome&)>;

// Compiles, extracts the code section and scores it against the baseline.
// Failed builds score kFailureFloor. Extraction failure on a built binary is
// an InfrastructureError.
Evaluation fitness_against_baseline(const Chromosome& chromosome, const CompileFn& compile,
                                    const BaselineScorer& scorer, ExtractionMode mode);

}  // namespace difftune
