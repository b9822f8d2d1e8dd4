// Exception types shared by all difftune modules.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace difftune {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value does not fit the catalog or graph it is used with.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Configuration values violating their documented ranges.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Repair could not satisfy a rule by turning flags off.
class UnsatisfiableError : public Error {
 public:
  UnsatisfiableError(const std::string& what, std::vector<std::size_t> rule_indices)
      : Error(what), rule_indices_(std::move(rule_indices)) {}
  // Indices into ConstraintSet::rules() of the rules that could not be met.
  const std::vector<std::size_t>& rule_indices() const { return rule_indices_; }

 private:
  std::vector<std::size_t> rule_indices_;
};

// Failure to locate the code section inside a binary.
class ExtractionError : public Error {
 public:
  using Error::Error;
};

// Environment failures that abort a session (missing compiler, I/O).
class InfrastructureError : public Error {
 public:
  using Error::Error;
};

// Session log corruption or sequencing violations.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Input for which a statistic is undefined (empty sets, zero variance).
class UndefinedInputError : public Error {
 public:
  using Error::Error;
};

// Text-format parse failure; line is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace difftune
