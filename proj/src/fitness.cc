#include "difftune/fitness.h"

#include <algorithm>

#include "difftune/digest.h"
#include "difftune/error.h"

namespace difftune {

namespace {

double ncd_from_lengths(std::size_t cx, std::size_t cy, std::size_t cxy) {
  std::size_t hi = std::max(cx, cy);
  std::size_t lo = std::min(cx, cy);
  if (hi == 0) throw InfrastructureError("internal: compressor returned zero length");
  return (static_cast<double>(cxy) - static_cast<double>(lo)) / static_cast<double>(hi);
}

std::vector<std::uint8_t> concat(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y) {
  std::vector<std::uint8_t> xy;
  xy.reserve(x.size() + y.size());
  xy.insert(xy.end(), x.begin(), x.end());
  xy.insert(xy.end(), y.begin(), y.end());
  return xy;
}

}  // namespace

NcdScore ncd(const CodeSection& x, const CodeSection& y, const CompressorId& compressor) {
  if (x.bytes.empty() || y.bytes.empty()) {
    throw UndefinedInputError("ncd requires two non-empty sections");
  }
  std::size_t cx = compressed_len(x.bytes, compressor);
  std::size_t cy = y.bytes == x.bytes ? cx : compressed_len(y.bytes, compressor);
  std::size_t cxy = compressed_len(concat(x.bytes, y.bytes), compressor);
  return {ncd_from_lengths(cx, cy, cxy)};
}

std::vector<NcdScore> ncd_row(const CodeSection& x, std::span<const CodeSection> ys,
                              const CompressorId& compressor) {
  if (x.bytes.empty()) throw UndefinedInputError("ncd requires two non-empty sections");
  for (const CodeSection& y : ys) {
    if (y.bytes.empty()) throw UndefinedInputError("ncd requires two non-empty sections");
  }
  const std::size_t cx = compressed_len(x.bytes, compressor);
  std::vector<NcdScore> out;
  out.reserve(ys.size());
  for (const CodeSection& y : ys) {
    std::size_t cy = y.bytes == x.bytes ? cx : compressed_len(y.bytes, compressor);
    std::size_t cxy = compressed_len(concat(x.bytes, y.bytes), compressor);
    out.push_back({ncd_from_lengths(cx, cy, cxy)});
  }
  return out;
}

BaselineScorer::BaselineScorer(CodeSection baseline, CompressorId compressor)
    : baseline_(std::move(baseline)), compressor_(std::move(compressor)) {
  if (baseline_.bytes.empty()) throw UndefinedInputError("baseline code section is empty");
  baseline_len_ = compressed_len(baseline_.bytes, compressor_);
}

NcdScore BaselineScorer::score(std::span<const std::uint8_t> candidate) const {
  if (candidate.empty()) throw UndefinedInputError("ncd requires two non-empty sections");
  std::size_t cx = compressed_len(candidate, compressor_);
  std::size_t cxy = compressed_len(concat(candidate, baseline_.bytes), compressor_);
  return {ncd_from_lengths(cx, baseline_len_, cxy)};
}

Evaluation fitness_against_baseline(const Chromosome& chromosome, const CompileFn& compile,
                                    const BaselineScorer& scorer, ExtractionMode mode) {
  BuildOutput built = compile(chromosome);
  Evaluation ev;
  ev.status = built.status;
  ev.duration = built.duration;
  if (built.status != CompileStatus::kOk) {
    ev.fitness = kFailureFloor;
    return ev;
  }
  ev.binary_digest = sha256_hex(built.binary);
  CodeSection section;
  try {
    section = extract_code_section(built.binary, mode);
  } catch (const ExtractionError& e) {
    throw InfrastructureError(std::string("built binary has no usable code section: ") + e.what());
  }
  if (section.bytes.empty()) {
    throw InfrastructureError("built binary has an empty code section");
  }
  ev.fitness = scorer.score(section).value;
  return ev;
}

}  // namespace difftune
