#include <doctest.h>

#include <algorithm>

#include "difftune/elf.h"
#include "difftune/fitness.h"
#include "difftune/synthetic.h"

using namespace difftune;

TEST_SUITE("synthetic") {
  TEST_CASE("program is deterministic per seed") {
    CHECK(synthetic_program(1) == synthetic_program(1));
    CHECK(synthetic_program(1) != synthetic_program(2));
    CHECK(synthetic_program(1).size() == kSyntheticTextSize);
  }

  TEST_CASE("identity level and no flags leave the program untouched") {
    CHECK(synthetic_text({}, kSyntheticIdentityLevel, 4) == synthetic_program(4));
    CHECK(synthetic_text({}, "-O2", 4) != synthetic_program(4));
  }

  TEST_CASE("output does not depend on flag order") {
    std::vector<std::string> a{"-fa", "-fb", "-fc", "-fd"};
    std::vector<std::string> b{"-fd", "-fb", "-fa", "-fc"};
    CHECK(synthetic_text(a, "-O0", 9) == synthetic_text(b, "-O0", 9));
  }

  TEST_CASE("each flag only touches its residue class") {
    const auto base = synthetic_program(5);
    std::vector<std::string> one{"-fsome-pass"};
    const auto out = synthetic_text(one, "-O0", 5);
    const FlagTransform t = transform_for("-fsome-pass", 5);
    for (std::size_t b = 0; b < kSyntheticTextSize / kSyntheticBlockSize; ++b) {
      if (b % kSyntheticResidueClasses == t.residue) continue;
      REQUIRE(std::equal(base.begin() + static_cast<long>(b * kSyntheticBlockSize),
                         base.begin() + static_cast<long>((b + 1) * kSyntheticBlockSize),
                         out.begin() + static_cast<long>(b * kSyntheticBlockSize)));
    }
    CHECK(out != base);
  }

  TEST_CASE("transform kind and class depend on the name only") {
    auto a = transform_for("-fmock-pass-18", 1);
    auto b = transform_for("-fmock-pass-18", 2);
    CHECK(a.kind == b.kind);
    CHECK(a.residue == b.residue);
    CHECK(a.key != b.key);
  }

  TEST_CASE("planted catalog roles") {
    // Targets rewrite bytes; decoys only move blocks.
    for (const char* n : {"-fmock-pass-18", "-fmock-pass-2", "-fmock-pass-38", "-fmock-pass-46",
                          "-fmock-pass-5", "-fmock-pass-26", "-fmock-pass-45", "-fmock-pass-33"}) {
      CAPTURE(n);
      CHECK(transform_for(n, 7).kind != TransformKind::kBlockShuffle);
    }
    for (const char* n : {"-fmock-pass-1", "-fmock-pass-44", "-fmock-pass-16", "-fmock-pass-11",
                          "-fmock-pass-25", "-fmock-pass-31", "-fmock-pass-34", "-fmock-pass-51"}) {
      CAPTURE(n);
      CHECK(transform_for(n, 7).kind == TransformKind::kBlockShuffle);
    }
  }

  TEST_CASE("byte-rewriting transforms move NCD more than shuffles") {
    const CompressorId comp;
    BaselineScorer s(CodeSection{synthetic_program(7), "base"}, comp);
    std::vector<std::string> target{"-fmock-pass-18"};
    std::vector<std::string> decoy{"-fmock-pass-1"};
    const double t = s.score(synthetic_text(target, "-O0", 7)).value;
    const double d = s.score(synthetic_text(decoy, "-O0", 7)).value;
    CHECK(t > d);
    CHECK(d > 0.0);
  }

  TEST_CASE("graph covers every block") {
    auto text = synthetic_program(3);
    ProgramGraph g = synthetic_graph(text);
    CHECK(g.functions.size() == kSyntheticResidueClasses);
    CHECK(g.total_blocks() == kSyntheticTextSize / kSyntheticBlockSize);
    CHECK_NOTHROW(g.validate());
    CHECK(parse_program_graph(serialize_program_graph(g)) == g);
  }
}
