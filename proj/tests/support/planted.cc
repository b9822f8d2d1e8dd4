#include "planted.h"

#include "difftune/digest.h"
#include "difftune/elf.h"
#include "difftune/synthetic.h"

namespace difftune::testing {

namespace {

const BaselineScorer& scorer() {
  static const BaselineScorer s(
      extract_code_section(synthetic_backend_emit({}, kSyntheticIdentityLevel, kPlantedSeed),
                           ExtractionMode::kElfText),
      CompressorId{});
  return s;
}

}  // namespace

std::filesystem::path source_dir() { return DIFFTUNE_SOURCE_DIR; }
std::filesystem::path build_dir() { return DIFFTUNE_BUILD_DIR; }

PlantedScore planted_pipeline_score(const Chromosome& c, const FlagSpace& space) {
  auto names = enabled_flag_names(c, space);
  auto image = synthetic_backend_emit(names, space.base_levels()[c.base_level], kPlantedSeed);
  PlantedScore s;
  s.digest = sha256_hex(image);
  s.fitness = scorer().score(extract_code_section(image, ExtractionMode::kElfText)).value;
  return s;
}

PlantedOracle compute_planted_oracle() {
  PlantedOracle o;
  o.catalog = load_catalog(source_dir() / "data/catalogs/mock-planted.cat");
  const FlagSpace& space = o.catalog.space;
  const std::size_t n = space.size();
  bool first = true;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
    Chromosome raw = Chromosome::off(0, n);
    for (std::size_t i = 0; i < n; ++i) raw.genes[i] = (bits >> i) & 1;
    ++o.raw_vectors;
    Chromosome c = repair(raw, o.catalog.constraints);
    if (o.table.count(c)) continue;
    PlantedScore s = planted_pipeline_score(c, space);
    o.table.emplace(c, s);
    if (first || s.fitness > o.maximum) {
      o.maximum = s.fitness;
      o.argmax = c;
      first = false;
    }
  }
  return o;
}

}  // namespace difftune::testing
