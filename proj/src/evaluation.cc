#include "difftune/evaluation.h"

#include "difftune/error.h"

namespace difftune {

std::string_view status_name(CompileStatus status) {
  switch (status) {
    case CompileStatus::kOk: return "ok";
    case CompileStatus::kCompileError: return "compile_error";
    case CompileStatus::kTimeout: return "timeout";
  }
  return "?";
}

CompileStatus parse_status(std::string_view name) {
  if (name == "ok") return CompileStatus::kOk;
  if (name == "compile_error") return CompileStatus::kCompileError;
  if (name == "timeout") return CompileStatus::kTimeout;
  throw ParseError("unknown compile status '" + std::string(name) + "'", 0);
}

}  // namespace difftune
