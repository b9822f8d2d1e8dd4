#include <doctest.h>

#include "difftune/rng.h"
#include "difftune/synthetic.h"
#include "planted.h"
#include "testutil.h"

using namespace difftune;
using namespace difftune::testing;

namespace {

CommandResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), difftune_exe().string());
  return run_command(args);
}

// Planted config with extra [ga] settings.
std::string with_ga(std::string cfg, const std::string& lines) {
  const auto at = cfg.find("[ga]\n") + 5;
  return cfg.insert(at, lines);
}

std::string fixture(const char* name) { return (source_dir() / "tests/fixtures" / name).string(); }

void write_random(const std::filesystem::path& p, std::uint64_t seed) {
  CounterRng r(seed);
  std::string s(64 * 1024, '\0');
  for (char& c : s) c = static_cast<char>(r.next());
  write_file(p, s);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors") {
    CHECK(cli({}).exit_code == 1);
    CHECK(cli({"--help"}).exit_code == 0);
    CHECK(cli({"frobnicate"}).exit_code == 1);
    CHECK(cli({"--jobs", "0", "score", "a", "b"}).exit_code == 1);
    CHECK(cli({"tune"}).exit_code == 1);
  }

  TEST_CASE("score") {
    TempDir dir;
    write_random(dir / "x.bin", 1);
    write_random(dir / "y.bin", 2);
    auto same = cli({"score", (dir / "x.bin").string(), (dir / "x.bin").string(), "--mode", "whole_file"});
    CHECK(same.exit_code == 0);
    CHECK(std::stod(same.out) <= 0.05);
    CHECK(same.out.size() == std::string("0.000000\n").size());

    auto diff = cli({"score", (dir / "x.bin").string(), (dir / "y.bin").string(), "--mode", "whole_file"});
    CHECK(diff.exit_code == 0);
    CHECK(std::stod(diff.out) >= 0.9);

    auto elf = cli({"score", fixture("nop16-elf64.o"), fixture("nop16-elf32.o")});
    CHECK(elf.exit_code == 0);
    CHECK(elf.out == "0.000000\n");

    CHECK(cli({"score", (dir / "missing").string(), (dir / "x.bin").string()}).exit_code == 1);
    CHECK(cli({"score", (dir / "x.bin").string(), (dir / "y.bin").string()}).exit_code == 1);
  }

  TEST_CASE("structdiff") {
    auto self = cli({"structdiff", fixture("pair-a.graph"), fixture("pair-a.graph")});
    CHECK(self.exit_code == 0);
    CHECK(self.out == "0.0000\n");
    auto matched = cli({"structdiff", fixture("pair-a.graph"), fixture("pair-b.graph"), fixture("pair.match")});
    CHECK(matched.out == "0.0500\n");
    CHECK(cli({"structdiff", fixture("pair-a.graph"), fixture("pair-b.graph")}).out == "0.0500\n");
    auto bad = cli({"structdiff", fixture("pair-a.graph"), fixture("pair-b.graph"), fixture("pair-bad.match")});
    CHECK(bad.exit_code == 1);

    TempDir dir;
    write_file(dir / "broken.graph", "function f\nblock X eax\nedge 0\n");
    auto parse = cli({"structdiff", (dir / "broken.graph").string(), fixture("pair-a.graph")});
    CHECK(parse.exit_code == 1);
    CHECK(parse.err.find("line 3") != std::string::npos);
  }

  TEST_CASE("validate-constraints") {
    auto gcc = cli({"validate-constraints", (source_dir() / "data/catalogs/gcc-10.2.cat").string()});
    CHECK(gcc.exit_code == 0);
    CHECK(gcc.out.find("checked\t") != std::string::npos);
    CHECK(cli({"validate-constraints", (source_dir() / "data/catalogs/llvm-11.0.cat").string()}).exit_code == 0);

    TempDir dir;
    write_file(dir / "contra.cat", "level -O0\nflag a\nflag b\nclause +a\nrequires b a\nclause -a\n");
    auto contra = cli({"validate-constraints", (dir / "contra.cat").string()});
    CHECK(contra.exit_code == 3);
    CHECK(contra.err.find("clause") != std::string::npos);

    write_file(dir / "empty.cat", "");
    auto empty = cli({"validate-constraints", (dir / "empty.cat").string()});
    CHECK(empty.exit_code == 0);
    CHECK(empty.out.find("flags\t0\n") != std::string::npos);
    CHECK(empty.out.find("requires\t0\n") != std::string::npos);
    CHECK(empty.out.find("conflicts\t0\n") != std::string::npos);

    write_file(dir / "bad.cat", "level -O0\nflag a\nrequires a zz\n");
    CHECK(cli({"validate-constraints", (dir / "bad.cat").string()}).exit_code == 1);
    CHECK(cli({"validate-constraints", (dir / "none.cat").string()}).exit_code == 1);
  }

  TEST_CASE("tune, resume, report and potency") {
    TempDir dir;
    write_file(dir / "s.ini", with_ga(planted_config(dir.path(), 3, "max_iterations = 2\n"), "population_size = 6\n"));
    const std::string cfg = (dir / "s.ini").string();
    const std::string log = (dir / "s.btlog").string();

    auto first = cli({"--config", cfg, "--session", log, "--jobs", "2", "tune"});
    REQUIRE(first.exit_code == 0);
    CHECK(first.out.find("best_fitness\t") == 0);
    CHECK(std::filesystem::exists(log + ".best.1"));
    CHECK(std::filesystem::exists(log + ".best.1.flags"));
    CHECK(read_file(log + ".best.1.flags").starts_with("-O0"));
    const std::string bytes = read_file(log);

    auto again = cli({"--config", cfg, "--session", log, "tune"});
    CHECK(again.exit_code == 0);
    CHECK(again.err.find("resumed") != std::string::npos);
    CHECK(read_file(log) == bytes);

    auto rep = cli({"--config", cfg, "--session", log, "report"});
    CHECK(rep.exit_code == 0);
    std::string csv = read_file(log + ".report/generations.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(read_file(log + ".report/summary.txt").find("reason\tmax_iterations") != std::string::npos);

    auto pot = cli({"--config", cfg, "--session", log, "potency"});
    CHECK(pot.exit_code == 0);
    CHECK(pot.out.find("scorer\tncd") != std::string::npos);

    // Changing the GA settings must not silently reuse the log.
    write_file(dir / "edited.ini", with_ga(planted_config(dir.path(), 3, "max_iterations = 2\n"), "population_size = 7\n"));
    auto edited = cli({"--config", (dir / "edited.ini").string(), "--session", log, "tune"});
    CHECK(edited.exit_code == 1);
    CHECK(edited.err.find("ga:") != std::string::npos);
  }

  TEST_CASE("binhunt potency needs graph sidecars") {
    TempDir dir;
    std::string cfg_text = with_ga(planted_config(dir.path(), 4, "max_iterations = 1\n"), "population_size = 4\n");
    cfg_text.replace(cfg_text.find("args = "), 7, "args = --emit-graph ");
    write_file(dir / "s.ini", cfg_text);
    const std::string cfg = (dir / "s.ini").string();
    const std::string log = (dir / "s.btlog").string();
    REQUIRE(cli({"--config", cfg, "--session", log, "tune"}).exit_code == 0);
    auto pot = cli({"--config", cfg, "--session", log, "potency", "--scorer", "binhunt"});
    CHECK(pot.exit_code == 0);
    CHECK(pot.out.find("scorer\tbinhunt") != std::string::npos);
  }

  TEST_CASE("missing compiler aborts before any record") {
    TempDir dir;
    std::string cfg = planted_config(dir.path(), 1, "max_iterations = 2\n");
    cfg.replace(cfg.find(mockcc_exe().string()), mockcc_exe().string().size(), (dir / "no-such-cc").string());
    write_file(dir / "s.ini", cfg);
    auto r = cli({"--config", (dir / "s.ini").string(), "--session", (dir / "s.btlog").string(), "tune"});
    CHECK(r.exit_code == 2);
    if (std::filesystem::exists(dir / "s.btlog")) {
      std::string log = read_file(dir / "s.btlog");
      CHECK(std::count(log.begin(), log.end(), '\n') <= 1);
    }
  }

  TEST_CASE("unsatisfiable catalog exits 3 from tune") {
    TempDir dir;
    write_file(dir / "u.cat", "level -O0\nflag -fa\nclause +-fa\n");
    std::string cfg = planted_config(dir.path(), 1, "max_iterations = 2\n");
    cfg.replace(cfg.find((source_dir() / "data/catalogs/mock-planted.cat").string()),
                (source_dir() / "data/catalogs/mock-planted.cat").string().size(), (dir / "u.cat").string());
    write_file(dir / "s.ini", cfg);
    auto r = cli({"--config", (dir / "s.ini").string(), "--session", (dir / "s.btlog").string(), "tune"});
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("clause") != std::string::npos);
  }
}
