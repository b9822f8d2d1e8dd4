// mockcc: deterministic stand-in compiler for hermetic sessions.
//
//   mockcc [--seed N] [--emit-graph] [-O<level>] [flags...] sources... -o OUT
//
// Writes an ELF64 whose .text is the synthetic program for the seed with
// each flag's transform applied. "-fno-*" tokens are accepted and ignored.
// A token "__fail__" exits 1; "__hang__" sleeps for an hour.

#include <unistd.h>

#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "difftune/synthetic.h"

namespace {

int usage(const char* msg) {
  std::fprintf(stderr, "mockcc: %s\n", msg);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::uint64_t seed = 1;
  bool emit_graph = false;
  std::string level(difftune::kSyntheticIdentityLevel);
  std::string out;
  std::vector<std::string> flags;
  std::vector<std::string> sources;

  for (int i = 1; i < argc; ++i) {
    std::string_view a = argv[i];
    if (a == "__fail__") return usage("poisoned flag __fail__");
    if (a == "__hang__") {
      ::sleep(3600);
      return 1;
    }
    if (a == "--seed") {
      if (++i >= argc) return usage("--seed needs a value");
      std::string_view v = argv[i];
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), seed);
      if (ec != std::errc() || p != v.data() + v.size()) return usage("bad --seed");
    } else if (a == "--emit-graph") {
      emit_graph = true;
    } else if (a == "-o") {
      if (++i >= argc) return usage("-o needs a path");
      out = argv[i];
    } else if (a.starts_with("-O")) {
      level = std::string(a);
    } else if (a.starts_with("-fno-") || a == "-c") {
      // Negative forms restate the default.
    } else if (a.starts_with("-")) {
      flags.emplace_back(a);
    } else {
      sources.emplace_back(a);
    }
  }
  if (out.empty()) return usage("no output file (-o)");
  if (sources.empty()) return usage("no input files");
  for (const std::string& s : sources) {
    if (!std::filesystem::exists(s)) {
      std::fprintf(stderr, "mockcc: %s: no such file\n", s.c_str());
      return 1;
    }
  }

  const auto text = difftune::synthetic_text(flags, level, seed);
  const auto image = difftune::make_elf64(text);
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(image.data()), static_cast<std::streamsize>(image.size()));
  if (!f) return usage("cannot write output");
  if (emit_graph) {
    std::ofstream g(out + ".graph", std::ios::trunc);
    g << difftune::serialize_program_graph(difftune::synthetic_graph(text));
    if (!g) return usage("cannot write graph");
  }
  return 0;
}
