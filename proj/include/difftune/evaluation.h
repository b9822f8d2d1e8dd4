// Outcome of scoring one chromosome, shared by the engine, store and fitness.
#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace difftune {

enum class CompileStatus { kOk, kCompileError, kTimeout };

std::string_view status_name(CompileStatus status);
// Throws ParseError for unknown names.
CompileStatus parse_status(std::string_view name);

// Fitness assigned to chromosomes that fail to build; below any NCD value.
inline constexpr double kFailureFloor = -1.0;

struct Evaluation {
  CompileStatus status = CompileStatus::kOk;
  std::optional<std::string> binary_digest;  // present iff status == kOk
  double fitness = kFailureFloor;
  std::chrono::microseconds duration{0};
};

}  // namespace difftune
