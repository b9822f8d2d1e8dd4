#include <doctest.h>

#include <chrono>

#include "difftune/digest.h"
#include "difftune/driver.h"
#include "difftune/error.h"
#include "difftune/synthetic.h"
#include "testutil.h"

using namespace difftune;
using namespace difftune::testing;

namespace {

FlagSpace small_space() {
  return FlagSpace({"-O0", "-O2"},
                   {FlagDescriptor{0, "-funroll-loops", std::nullopt},
                    FlagDescriptor{1, "-fomit-frame-pointer", std::string("-fno-omit-frame-pointer")},
                    FlagDescriptor{2, "__fail__", std::nullopt},
                    FlagDescriptor{3, "__hang__", std::nullopt}},
                   "cat");
}

BuildManifest mock_manifest(const TempDir& dir) {
  write_file(dir / "a.c", "int main(void) { return 0; }\n");
  BuildManifest m;
  m.compiler = mockcc_exe().string();
  m.fixed_args = {"--seed", "11"};
  m.sources = {"a.c"};
  m.workdir = dir.path();
  m.timeout = std::chrono::milliseconds(5000);
  return m;
}

}  // namespace

TEST_SUITE("driver") {
  TEST_CASE("render_command ordering") {
    FlagSpace space = small_space();
    BuildManifest m;
    m.compiler = "cc";
    m.fixed_args = {"-w"};
    m.sources = {"a.c"};
    Chromosome c = Chromosome::off(1, 4);
    CHECK(render_command(m, c, space, "OUT") ==
          std::vector<std::string>{"cc", "-w", "-O2", "-fno-omit-frame-pointer", "a.c", "-o", "OUT"});

    c.genes[0] = true;
    auto argv = render_command(m, c, space, "OUT");
    CHECK(argv[2] == "-O2");
    CHECK(argv[3] == "-funroll-loops");
    CHECK(argv[5] == "a.c");

    m.fixed_args.clear();
    CHECK(render_command(m, c, space, "OUT")[1] == "-O2");
  }

  TEST_CASE("output paths are unique per chromosome") {
    BuildManifest m;
    Chromosome a = Chromosome::off(0, 4);
    Chromosome b = a;
    b.genes[1] = true;
    CHECK(output_path_for(m, a) != output_path_for(m, b));
    CHECK(output_path_for(m, a) == output_path_for(m, a));
    CHECK(output_path_for(m, a).filename() == "a.out");
  }

  TEST_CASE("manifest validation and digest") {
    BuildManifest m;
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m.compiler = "cc";
    m.sources = {"a.c"};
    CHECK_NOTHROW(m.validate());
    m.timeout = std::chrono::milliseconds(0);
    CHECK_THROWS_AS(m.validate(), ConfigError);
    BuildManifest n = m;
    n.timeout = std::chrono::milliseconds(1);
    CHECK(m.digest() != n.digest());
    CHECK(m.digest().size() == 64);
  }

  TEST_CASE("mock build digest is a function of the flag set") {
    TempDir dir;
    BuildManifest m = mock_manifest(dir);
    FlagSpace space = small_space();
    Chromosome c = Chromosome::off(1, 4);
    c.genes[0] = true;
    CompileResult r = compile(m, c, space);
    REQUIRE(r.status == CompileStatus::kOk);
    std::vector<std::string> on{"-funroll-loops"};
    CHECK(r.binary_digest == sha256_hex(synthetic_backend_emit(on, "-O2", 11)));
    CHECK(compile(m, c, space).binary_digest == r.binary_digest);
  }

  TEST_CASE("poison flag yields compile_error with stderr") {
    TempDir dir;
    BuildManifest m = mock_manifest(dir);
    Chromosome c = Chromosome::off(0, 4);
    c.genes[2] = true;
    CompileResult r = compile(m, c, small_space());
    CHECK(r.status == CompileStatus::kCompileError);
    CHECK_FALSE(r.binary_digest);
    CHECK(r.stderr_excerpt.find("__fail__") != std::string::npos);
  }

  TEST_CASE("hanging build is killed at the deadline") {
    TempDir dir;
    BuildManifest m = mock_manifest(dir);
    m.timeout = std::chrono::milliseconds(300);
    Chromosome c = Chromosome::off(0, 4);
    c.genes[3] = true;
    auto t0 = std::chrono::steady_clock::now();
    CompileResult r = compile(m, c, small_space());
    auto took = std::chrono::steady_clock::now() - t0;
    CHECK(r.status == CompileStatus::kTimeout);
    CHECK(took < std::chrono::milliseconds(300) + std::chrono::seconds(2));
  }

  TEST_CASE("missing compiler is an infrastructure failure") {
    TempDir dir;
    BuildManifest m = mock_manifest(dir);
    m.compiler = (dir / "no-such-cc").string();
    CHECK_THROWS_AS(compile(m, Chromosome::off(0, 4), small_space()), InfrastructureError);
  }

  TEST_CASE("compile fn cleans up its output directory") {
    TempDir dir;
    BuildManifest m = mock_manifest(dir);
    CompileFn fn = make_compile_fn(m, small_space());
    BuildOutput out = fn(Chromosome::off(0, 4));
    CHECK(out.status == CompileStatus::kOk);
    std::vector<std::string> none;
    CHECK(out.binary == synthetic_backend_emit(none, "-O0", 11));
    CHECK_FALSE(std::filesystem::exists(m.workdir / output_path_for(m, Chromosome::off(0, 4))));
  }

  TEST_CASE("compile leaves no files outside workdir") {
    TempDir outer;
    std::filesystem::create_directory(outer / "work");
    write_file(outer / "work" / "a.c", "x");
    BuildManifest m;
    m.compiler = mockcc_exe().string();
    m.sources = {"a.c"};
    m.workdir = outer / "work";
    compile(m, Chromosome::off(0, 4), small_space());
    std::size_t n = 0;
    for (auto& e : std::filesystem::directory_iterator(outer.path())) {
      (void)e;
      ++n;
    }
    CHECK(n == 1);
  }
}
