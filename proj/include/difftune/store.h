// Append-only session log (.btlog).
//
// One record per line, tab-separated, ending in the CRC32C (hex) of the
// bytes before the final tab. The first line is the session header:
//
//   #BTLOG v1  key=value ...                                        crc
//   I  seq gen chromosome status digest|- fitness duration_us         crc
//   G  seq gen best_fitness best_chromosome evaluated rng_draws pop   crc
//   E  seq reason generations wall_us                                 crc
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "difftune/error.h"
#include "difftune/evaluation.h"
#include "difftune/flagspace.h"
#include "difftune/ga.h"

namespace difftune {

inline constexpr std::string_view kLogMagic = "#BTLOG v1";

struct SessionHeader {
  std::string catalog_digest;
  std::size_t gene_count = 0;
  std::string manifest_digest;
  std::string ga_config;
  std::string termination;
  std::string compressor;
  std::string extraction;
  std::uint64_t seed = 0;
  std::string baseline_digest;

  std::vector<std::pair<std::string, std::string>> fields() const;
  static SessionHeader from_fields(const std::vector<std::pair<std::string, std::string>>& fields);
  // Names of differing fields as "key: expected X, found Y".
  std::vector<std::string> diff(const SessionHeader& found) const;

  bool operator==(const SessionHeader&) const = default;
};

struct IterationRecord {
  std::uint64_t sequence = 0;
  std::uint64_t generation = 0;
  Chromosome chromosome;
  CompileStatus status = CompileStatus::kOk;
  std::optional<std::string> binary_digest;
  double fitness = kFailureFloor;
  std::chrono::microseconds duration{0};

  bool operator==(const IterationRecord&) const = default;
};

struct GenerationRecord {
  std::uint64_t sequence = 0;
  GenerationSummary summary;
  std::uint64_t rng_draws = 0;
  std::vector<Chromosome> population;

  bool operator==(const GenerationRecord&) const = default;
};

struct EndRecord {
  std::uint64_t sequence = 0;
  StopReason reason = StopReason::kMaxIterations;
  std::uint64_t generations = 0;
  std::chrono::microseconds wall{0};

  bool operator==(const EndRecord&) const = default;
};

using LogRecord = std::variant<IterationRecord, GenerationRecord, EndRecord>;

// Single line (with trailing newline) for a record or header.
std::string serialize_header(const SessionHeader& header);
std::string serialize_record(const LogRecord& record);
// Parses one line without its newline. Throws IntegrityError on a bad
// checksum and ParseError on malformed fields.
LogRecord parse_record(std::string_view line, std::size_t gene_count);
SessionHeader parse_header(std::string_view line);

class HeaderMismatchError : public IntegrityError {
 public:
  explicit HeaderMismatchError(std::vector<std::string> diffs);
  const std::vector<std::string>& diffs() const { return diffs_; }

 private:
  std::vector<std::string> diffs_;
};

// Missing, empty or torn header line.
class MissingHeaderError : public IntegrityError {
 public:
  using IntegrityError::IntegrityError;
};

struct ResumeState {
  // Last completed generation, absent when none completed.
  std::optional<GenerationRecord> last_generation;
  std::optional<EndRecord> end;
};

struct StoreOptions {
  // fdatasync after each append, in addition to the unbuffered write.
  bool sync = false;
};

class SessionStore {
 public:
  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;
  SessionStore(SessionStore&& other) noexcept;
  SessionStore& operator=(SessionStore&& other) noexcept;
  ~SessionStore();

  // New log; fails if the file already exists and is non-empty.
  static SessionStore create(const std::filesystem::path& path, const SessionHeader& header,
                             StoreOptions options = {});
  // Existing log: truncates a torn final line, refuses interior corruption
  // and headers differing from `expected`.
  static SessionStore open(const std::filesystem::path& path, const SessionHeader& expected,
                           StoreOptions options = {});

  // Appends after checking record.sequence == next_sequence().
  std::uint64_t append(const LogRecord& record);
  std::uint64_t next_sequence() const { return last_sequence_ + 1; }

  std::optional<IterationRecord> lookup(const Chromosome& chromosome) const;

  const SessionHeader& header() const { return header_; }
  const std::vector<IterationRecord>& iterations() const { return iterations_; }
  const std::vector<GenerationRecord>& generations() const { return generations_; }
  const std::optional<EndRecord>& end() const { return end_; }
  ResumeState resume_state() const;
  std::size_t evaluated_in_generation(std::uint64_t generation) const;
  const std::filesystem::path& path() const { return path_; }

 private:
  SessionStore() = default;
  void index(const LogRecord& record);

  std::filesystem::path path_;
  int fd_ = -1;
  StoreOptions options_;
  SessionHeader header_;
  std::uint64_t last_sequence_ = 0;
  std::vector<IterationRecord> iterations_;
  std::vector<GenerationRecord> generations_;
  std::optional<EndRecord> end_;
  std::map<Chromosome, std::size_t> cache_;
  std::map<std::uint64_t, std::size_t> per_generation_;
};

// Read-only view of a log for reporting. A torn final line is ignored;
// any other damage throws with the 1-based line number.
struct SessionLog {
  SessionHeader header;
  std::vector<LogRecord> records;
};
SessionLog read_session_log(const std::filesystem::path& path);

}  // namespace difftune
