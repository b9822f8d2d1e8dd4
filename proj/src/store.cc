#include "difftune/store.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "difftune/digest.h"

namespace difftune {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string seal(std::string body) {
  std::string crc = crc32c_hex(body);
  body += '\t';
  body += crc;
  body += '\n';
  return body;
}

// Returns the body of a sealed line, verifying its checksum.
std::string_view unseal(std::string_view line) {
  auto tab = line.rfind('\t');
  if (tab == std::string_view::npos) throw IntegrityError("record has no checksum");
  std::string_view body = line.substr(0, tab);
  if (line.substr(tab + 1) != crc32c_hex(body)) throw IntegrityError("record checksum mismatch");
  return body;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

double parse_double(std::string_view s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError("bad number '" + std::string(s) + "'", 0);
  }
  return v;
}

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError("bad integer '" + std::string(s) + "'", 0);
  }
  return v;
}

std::string join_population(const std::vector<Chromosome>& pop) {
  std::string out;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    if (i) out += ',';
    out += pop[i].encode();
  }
  return out;
}

struct RecordVisitor {
  std::string operator()(const IterationRecord& r) const {
    std::string s = "I\t" + std::to_string(r.sequence) + "\t" + std::to_string(r.generation) +
                    "\t" + r.chromosome.encode() + "\t" + std::string(status_name(r.status)) +
                    "\t" + (r.binary_digest ? *r.binary_digest : "-") + "\t" +
                    fmt_double(r.fitness) + "\t" + std::to_string(r.duration.count());
    return s;
  }
  std::string operator()(const GenerationRecord& r) const {
    const GenerationSummary& g = r.summary;
    return "G\t" + std::to_string(r.sequence) + "\t" + std::to_string(g.index) + "\t" +
           fmt_double(g.best_fitness) + "\t" + g.best_chromosome.encode() + "\t" +
           std::to_string(g.evaluated_count) + "\t" + std::to_string(r.rng_draws) + "\t" +
           join_population(r.population);
  }
  std::string operator()(const EndRecord& r) const {
    return "E\t" + std::to_string(r.sequence) + "\t" + std::string(stop_reason_name(r.reason)) +
           "\t" + std::to_string(r.generations) + "\t" + std::to_string(r.wall.count());
  }
};

std::uint64_t sequence_of(const LogRecord& r) {
  return std::visit([](const auto& x) { return x.sequence; }, r);
}

void write_all(int fd, std::string_view data, const std::filesystem::path& path) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw InfrastructureError("write to " + path.string() + " failed: " + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InfrastructureError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Splits the log into complete lines; `torn_at` receives the offset of an
// unterminated final line, if any.
std::vector<std::string_view> complete_lines(std::string_view text, std::optional<std::size_t>& torn_at) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      torn_at = start;
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

IntegrityError at_line(std::size_t line, const std::exception& e) {
  return IntegrityError("corrupt session log at line " + std::to_string(line) + ": " + e.what());
}

}  // namespace

std::vector<std::pair<std::string, std::string>> SessionHeader::fields() const {
  return {{"catalog", catalog_digest},   {"genes", std::to_string(gene_count)},
          {"manifest", manifest_digest}, {"ga", ga_config},
          {"stop", termination},         {"compressor", compressor},
          {"extract", extraction},       {"seed", std::to_string(seed)},
          {"baseline", baseline_digest}};
}

SessionHeader SessionHeader::from_fields(const std::vector<std::pair<std::string, std::string>>& fields) {
  SessionHeader h;
  bool seen[9] = {};
  for (const auto& [k, v] : fields) {
    int idx = -1;
    if (k == "catalog") h.catalog_digest = v, idx = 0;
    else if (k == "genes") h.gene_count = static_cast<std::size_t>(parse_u64(v)), idx = 1;
    else if (k == "manifest") h.manifest_digest = v, idx = 2;
    else if (k == "ga") h.ga_config = v, idx = 3;
    else if (k == "stop") h.termination = v, idx = 4;
    else if (k == "compressor") h.compressor = v, idx = 5;
    else if (k == "extract") h.extraction = v, idx = 6;
    else if (k == "seed") h.seed = parse_u64(v), idx = 7;
    else if (k == "baseline") h.baseline_digest = v, idx = 8;
    else throw ParseError("unknown header field '" + k + "'", 1);
    seen[idx] = true;
  }
  for (bool s : seen) {
    if (!s) throw ParseError("session header is missing fields", 1);
  }
  return h;
}

std::vector<std::string> SessionHeader::diff(const SessionHeader& found) const {
  std::vector<std::string> out;
  auto mine = fields();
  auto theirs = found.fields();
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].second != theirs[i].second) {
      out.push_back(mine[i].first + ": expected '" + mine[i].second + "', found '" +
                    theirs[i].second + "'");
    }
  }
  return out;
}

std::string serialize_header(const SessionHeader& header) {
  std::string body(kLogMagic);
  for (const auto& [k, v] : header.fields()) body += "\t" + k + "=" + v;
  return seal(std::move(body));
}

SessionHeader parse_header(std::string_view line) {
  if (!line.starts_with(std::string(kLogMagic) + "\t")) throw MissingHeaderError("missing #BTLOG v1 header");
  std::string_view body = unseal(line);
  auto parts = split_tabs(body);
  std::vector<std::pair<std::string, std::string>> fields;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    auto eq = parts[i].find('=');
    if (eq == std::string_view::npos) throw ParseError("header field without '='", 1);
    fields.emplace_back(std::string(parts[i].substr(0, eq)), std::string(parts[i].substr(eq + 1)));
  }
  return SessionHeader::from_fields(fields);
}

std::string serialize_record(const LogRecord& record) {
  return seal(std::visit(RecordVisitor{}, record));
}

LogRecord parse_record(std::string_view line, std::size_t gene_count) {
  auto f = split_tabs(unseal(line));
  auto need = [&f](std::size_t n) {
    if (f.size() != n) throw ParseError("record has " + std::to_string(f.size()) + " fields", 0);
  };
  if (f[0] == "I") {
    need(8);
    IterationRecord r;
    r.sequence = parse_u64(f[1]);
    r.generation = parse_u64(f[2]);
    r.chromosome = Chromosome::decode(f[3], gene_count);
    r.status = parse_status(f[4]);
    if (f[5] != "-") r.binary_digest = std::string(f[5]);
    r.fitness = parse_double(f[6]);
    r.duration = std::chrono::microseconds(parse_u64(f[7]));
    return r;
  }
  if (f[0] == "G") {
    need(8);
    GenerationRecord r;
    r.sequence = parse_u64(f[1]);
    r.summary.index = parse_u64(f[2]);
    r.summary.best_fitness = parse_double(f[3]);
    r.summary.best_chromosome = Chromosome::decode(f[4], gene_count);
    r.summary.evaluated_count = static_cast<std::size_t>(parse_u64(f[5]));
    r.rng_draws = parse_u64(f[6]);
    std::string_view pop = f[7];
    while (!pop.empty()) {
      auto comma = pop.find(',');
      r.population.push_back(Chromosome::decode(pop.substr(0, comma), gene_count));
      if (comma == std::string_view::npos) break;
      pop.remove_prefix(comma + 1);
    }
    return r;
  }
  if (f[0] == "E") {
    need(5);
    EndRecord r;
    r.sequence = parse_u64(f[1]);
    r.reason = parse_stop_reason(f[2]);
    r.generations = parse_u64(f[3]);
    r.wall = std::chrono::microseconds(parse_u64(f[4]));
    return r;
  }
  throw ParseError("unknown record type '" + std::string(f[0]) + "'", 0);
}

HeaderMismatchError::HeaderMismatchError(std::vector<std::string> diffs)
    : IntegrityError([&diffs] {
        std::string msg = "session header does not match the configuration:";
        for (const std::string& d : diffs) msg += "\n  " + d;
        return msg;
      }()),
      diffs_(std::move(diffs)) {}

SessionStore::SessionStore(SessionStore&& other) noexcept { *this = std::move(other); }

SessionStore& SessionStore::operator=(SessionStore&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    path_ = std::move(other.path_);
    fd_ = std::exchange(other.fd_, -1);
    options_ = other.options_;
    header_ = std::move(other.header_);
    last_sequence_ = other.last_sequence_;
    iterations_ = std::move(other.iterations_);
    generations_ = std::move(other.generations_);
    end_ = std::move(other.end_);
    cache_ = std::move(other.cache_);
    per_generation_ = std::move(other.per_generation_);
  }
  return *this;
}

SessionStore::~SessionStore() {
  if (fd_ >= 0) ::close(fd_);
}

SessionStore SessionStore::create(const std::filesystem::path& path, const SessionHeader& header,
                                  StoreOptions options) {
  std::error_code ec;
  if (std::filesystem::exists(path, ec) && std::filesystem::file_size(path, ec) > 0) {
    throw IntegrityError("session log " + path.string() + " already exists");
  }
  SessionStore s;
  s.path_ = path;
  s.options_ = options;
  s.header_ = header;
  s.fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_APPEND | O_CLOEXEC, 0644);
  if (s.fd_ < 0) throw InfrastructureError("cannot create " + path.string() + ": " + std::strerror(errno));
  write_all(s.fd_, serialize_header(header), path);
  if (options.sync) ::fdatasync(s.fd_);
  return s;
}

SessionStore SessionStore::open(const std::filesystem::path& path, const SessionHeader& expected,
                                StoreOptions options) {
  const std::string text = read_all(path);
  std::optional<std::size_t> torn_at;
  auto lines = complete_lines(text, torn_at);
  if (lines.empty()) throw MissingHeaderError("session log " + path.string() + " has no header");

  SessionStore s;
  s.path_ = path;
  s.options_ = options;
  try {
    s.header_ = parse_header(lines[0]);
  } catch (const MissingHeaderError&) {
    throw;
  } catch (const std::exception& e) {
    throw MissingHeaderError(std::string("unreadable session header: ") + e.what());
  }
  if (auto diffs = expected.diff(s.header_); !diffs.empty()) throw HeaderMismatchError(std::move(diffs));

  for (std::size_t i = 1; i < lines.size(); ++i) {
    LogRecord rec;
    try {
      rec = parse_record(lines[i], s.header_.gene_count);
    } catch (const std::exception& e) {
      throw at_line(i + 1, e);
    }
    if (sequence_of(rec) != s.next_sequence()) {
      throw IntegrityError("corrupt session log at line " + std::to_string(i + 1) +
                           ": sequence " + std::to_string(sequence_of(rec)) + " out of order");
    }
    s.index(rec);
  }

  if (torn_at) {
    if (::truncate(path.c_str(), static_cast<off_t>(*torn_at)) != 0) {
      throw InfrastructureError("cannot truncate torn tail of " + path.string());
    }
  }
  s.fd_ = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
  if (s.fd_ < 0) throw InfrastructureError("cannot open " + path.string() + ": " + std::strerror(errno));
  return s;
}

void SessionStore::index(const LogRecord& record) {
  last_sequence_ = sequence_of(record);
  if (const auto* it = std::get_if<IterationRecord>(&record)) {
    cache_.emplace(it->chromosome, iterations_.size());
    ++per_generation_[it->generation];
    iterations_.push_back(*it);
  } else if (const auto* g = std::get_if<GenerationRecord>(&record)) {
    generations_.push_back(*g);
  } else {
    end_ = std::get<EndRecord>(record);
  }
}

std::uint64_t SessionStore::append(const LogRecord& record) {
  if (fd_ < 0) throw IntegrityError("session store is closed");
  const std::uint64_t seq = sequence_of(record);
  if (seq != next_sequence()) {
    throw IntegrityError("append with sequence " + std::to_string(seq) + ", expected " +
                         std::to_string(next_sequence()));
  }
  if (end_) throw IntegrityError("session already ended");
  if (const auto* it = std::get_if<IterationRecord>(&record)) {
    if (it->chromosome.genes.size() != header_.gene_count) {
      throw StructuralError("record chromosome does not match the session's gene count");
    }
  }
  write_all(fd_, serialize_record(record), path_);
  if (options_.sync) ::fdatasync(fd_);
  index(record);
  return seq;
}

std::optional<IterationRecord> SessionStore::lookup(const Chromosome& chromosome) const {
  auto it = cache_.find(chromosome);
  if (it == cache_.end()) return std::nullopt;
  return iterations_[it->second];
}

ResumeState SessionStore::resume_state() const {
  ResumeState st;
  if (!generations_.empty()) st.last_generation = generations_.back();
  st.end = end_;
  return st;
}

std::size_t SessionStore::evaluated_in_generation(std::uint64_t generation) const {
  auto it = per_generation_.find(generation);
  return it == per_generation_.end() ? 0 : it->second;
}

SessionLog read_session_log(const std::filesystem::path& path) {
  const std::string text = read_all(path);
  std::optional<std::size_t> torn_at;
  auto lines = complete_lines(text, torn_at);
  if (lines.empty()) throw MissingHeaderError("session log " + path.string() + " has no header");
  SessionLog log;
  try {
    log.header = parse_header(lines[0]);
  } catch (const std::exception& e) {
    throw at_line(1, e);
  }
  std::uint64_t expected = 1;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    try {
      log.records.push_back(parse_record(lines[i], log.header.gene_count));
    } catch (const std::exception& e) {
      throw at_line(i + 1, e);
    }
    if (sequence_of(log.records.back()) != expected++) {
      throw IntegrityError("corrupt session log at line " + std::to_string(i + 1) +
                           ": sequence out of order");
    }
  }
  return log;
}

}  // namespace difftune
