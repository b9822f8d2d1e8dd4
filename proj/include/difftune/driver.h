// Compiler invocation from a declarative build manifest.
#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "difftune/evaluation.h"
#include "difftune/fitness.h"
#include "difftune/flagspace.h"

namespace difftune {

struct BuildManifest {
  std::string compiler;
  std::vector<std::string> fixed_args;
  std::vector<std::string> sources;
  // Relative to workdir; "{dir}" expands to a directory unique to the chromosome.
  std::string output_template = "{dir}/a.out";
  std::chrono::milliseconds timeout{60'000};
  std::filesystem::path workdir;
  std::vector<std::string> env_allowlist;

  // Throws ConfigError unless timeout > 0, sources and compiler are non-empty.
  void validate() const;
  // SHA-256 over a canonical rendering of every field.
  std::string digest() const;
};

inline constexpr std::size_t kStderrExcerptBytes = 4096;

struct CompileResult {
  CompileStatus status = CompileStatus::kOk;
  std::optional<std::string> binary_digest;  // present iff ok
  std::string stderr_excerpt;                // first 4 KiB of diagnostics
  std::chrono::microseconds duration{0};
  std::filesystem::path output_path;
};

// Workdir-relative output path for a chromosome.
std::filesystem::path output_path_for(const BuildManifest& manifest, const Chromosome& chromosome);

// compiler + fixed_args + decode(chromosome) + sources + {"-o", output}.
std::vector<std::string> render_command(const BuildManifest& manifest, const Chromosome& chromosome,
                                        const FlagSpace& space, const std::string& output);
std::vector<std::string> render_command(const BuildManifest& manifest, const Chromosome& chromosome,
                                        const FlagSpace& space);

// Runs the rendered command inside workdir with the manifest's timeout. A
// missing compiler executable is an InfrastructureError; a timed-out build
// has its whole process group killed.
CompileResult compile(const BuildManifest& manifest, const Chromosome& chromosome,
                      const FlagSpace& space);

// Optional program-graph file a backend may write next to the binary.
std::filesystem::path graph_sidecar(const std::filesystem::path& binary);

// compile() wrapped as a CompileFn: reads the built binary and removes the
// per-chromosome output directory afterwards.
CompileFn make_compile_fn(BuildManifest manifest, FlagSpace space);

}  // namespace difftune
