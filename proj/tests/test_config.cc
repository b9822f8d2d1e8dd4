#include <doctest.h>

#include "difftune/catalog.h"
#include "difftune/config.h"
#include "difftune/error.h"
#include "planted.h"
#include "testutil.h"

using namespace difftune;
using namespace difftune::testing;

namespace {

std::string minimal(const TempDir& dir, const std::string& extra = "") {
  write_file(dir / "a.c", "x");
  write_file(dir / "f.cat", "level -O0\nlevel -O2\nflag -fa\nflag -fb -fno-b\nrequires -fb -fa\n");
  return "[build]\ncompiler = cc\nsources = a.c\n[flags]\ncatalog = f.cat\n" + extra;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults") {
    TempDir dir;
    SessionConfig c = parse_config(minimal(dir), dir.path());
    CHECK(c.build.compiler == "cc");
    CHECK(c.build.sources == std::vector<std::string>{"a.c"});
    CHECK(c.build.workdir == std::filesystem::absolute(dir.path()));
    CHECK(c.catalog == dir / "f.cat");
    CHECK(c.ga.population_size == 20);
    CHECK(c.stop.plateau_window == 10);
    CHECK(c.extraction == ExtractionMode::kElfText);
    CHECK(c.compressor == CompressorId{});
    CHECK(c.record_timing);
    CHECK_FALSE(c.sync);
  }

  TEST_CASE("all sections") {
    TempDir dir;
    std::filesystem::create_directory(dir / "bin");
    std::string text = minimal(dir,
                               "[ga]\npopulation_size = 8\nmutation_rate = 0.1\nseed = 99\n"
                               "[stop]\nmax_iterations = 50\nmax_wall_clock_ms = 1000\nplateau_window = 0\n"
                               "[fitness]\nextraction = whole_file\ncompressor = lzma2:6\nbaseline = -O2 -fa\n"
                               "# comment\n[log]\ntiming = off\nsync = on\n");
    text.replace(text.find("compiler = cc"), 13, "compiler = bin/mycc\nargs = -w -g\ntimeout_ms = 500\nenv = PATH HOME");
    SessionConfig c = parse_config(text, dir.path());
    CHECK(c.build.compiler == (std::filesystem::absolute(dir.path()) / "bin/mycc").string());
    CHECK(c.build.fixed_args == std::vector<std::string>{"-w", "-g"});
    CHECK(c.build.timeout == std::chrono::milliseconds(500));
    CHECK(c.build.env_allowlist == std::vector<std::string>{"PATH", "HOME"});
    CHECK(c.ga.population_size == 8);
    CHECK(c.ga.seed == 99);
    CHECK(c.stop.max_iterations == 50u);
    CHECK(c.stop.max_wall_clock == std::chrono::milliseconds(1000));
    CHECK_FALSE(c.stop.plateau_enabled());
    CHECK(c.extraction == ExtractionMode::kWholeFile);
    CHECK(c.compressor.preset == 6);
    CHECK_FALSE(c.record_timing);
    CHECK(c.sync);

    Catalog cat = load_catalog(c.catalog);
    Chromosome base = baseline_chromosome(c, cat.space, cat.constraints);
    CHECK(base == Chromosome(1, {true, false}));
  }

  TEST_CASE("default baseline is O0 with everything off") {
    TempDir dir;
    SessionConfig c = parse_config(minimal(dir), dir.path());
    Catalog cat = load_catalog(c.catalog);
    CHECK(baseline_chromosome(c, cat.space, cat.constraints) == Chromosome::off(0, 2));
  }

  TEST_CASE("baseline tokens are checked and repaired") {
    TempDir dir;
    SessionConfig c = parse_config(minimal(dir, "[fitness]\nbaseline = -O0 -fb\n"), dir.path());
    Catalog cat = load_catalog(c.catalog);
    CHECK(baseline_chromosome(c, cat.space, cat.constraints) == Chromosome::off(0, 2));
    c.baseline = {"-O9"};
    CHECK_THROWS_AS(baseline_chromosome(c, cat.space, cat.constraints), ConfigError);
    c.baseline = {"-O0", "-fzz"};
    CHECK_THROWS_AS(baseline_chromosome(c, cat.space, cat.constraints), ConfigError);
  }

  TEST_CASE("rejections") {
    TempDir dir;
    CHECK_THROWS_AS(parse_config(minimal(dir, "[ga]\nspeed = 1\n"), dir.path()), ConfigError);
    CHECK_THROWS_AS(parse_config(minimal(dir, "[extra]\nx = 1\n"), dir.path()), ConfigError);
    CHECK_THROWS_AS(parse_config(minimal(dir, "[ga]\npopulation_size = many\n"), dir.path()), ConfigError);
    CHECK_THROWS_AS(parse_config(minimal(dir, "[log]\ntiming = sometimes\n"), dir.path()), ConfigError);
    CHECK_THROWS_AS(parse_config(minimal(dir, "[fitness]\ncompressor = zip\n"), dir.path()), ConfigError);
    CHECK_THROWS_AS(parse_config(minimal(dir, "[stop]\nmax_iterations = none\nplateau_window = 0\n"), dir.path()),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("[build]\ncompiler = cc\nsources = a.c\n", dir.path()), ConfigError);

    std::string missing_src = minimal(dir);
    missing_src.replace(missing_src.find("a.c"), 3, "nope.c");
    CHECK_THROWS_AS(parse_config(missing_src, dir.path()), ConfigError);

    std::string missing_cat = minimal(dir);
    missing_cat.replace(missing_cat.find("f.cat"), 5, "nope.cat");
    CHECK_THROWS_AS(parse_config(missing_cat, dir.path()), ConfigError);
  }

  TEST_CASE("syntax errors carry the line") {
    TempDir dir;
    try {
      parse_config(minimal(dir, "[ga]\nseed = 1\nseed = 2\n"), dir.path());
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 8);
    }
    CHECK_THROWS_AS(parse_config("[build\n", dir.path()), ParseError);
  }

  TEST_CASE("shipped mock config loads") {
    CHECK_NOTHROW(load_config(source_dir() / "data/configs/mock-planted.ini"));
    CHECK_THROWS_AS(load_config(source_dir() / "data/configs/none.ini"), ConfigError);
  }
}
