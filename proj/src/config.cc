#include "difftune/config.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "difftune/error.h"

namespace difftune {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"build", {"compiler", "args", "sources", "output", "timeout_ms", "workdir", "env"}},
      {"flags", {"catalog"}},
      {"ga",
       {"population_size", "mutation_rate", "crossover_rate", "must_mutate_count",
        "crossover_strength", "elite_count", "seed"}},
      {"stop", {"max_iterations", "max_wall_clock_ms", "plateau_threshold", "plateau_window"}},
      {"fitness", {"extraction", "compressor", "baseline"}},
      {"log", {"timing", "sync"}},
  };
  return keys;
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  return {std::istream_iterator<std::string>(in), std::istream_iterator<std::string>()};
}

template <typename T>
T number(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("bad value for " + key + ": '" + v + "'");
  }
  return out;
}

bool boolean(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("bad value for " + key + ": '" + v + "' (expected on/off)");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

void require_exists(const std::string& key, const std::filesystem::path& p) {
  if (!std::filesystem::exists(p)) throw ConfigError(key + " does not exist: " + p.string());
}

}  // namespace

SessionConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.message(), e.line());
  }

  SessionConfig c;
  const std::filesystem::path base = std::filesystem::absolute(base_dir);
  c.build.workdir = base;
  bool have_catalog = false;
  for (const auto& [section, body] : tree) {
    auto known = schema().find(section);
    if (known == schema().end()) {
      throw ConfigError(body.empty() ? "key outside any section: " + section
                                     : "unknown section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      if (!known->second.count(key)) throw ConfigError("unknown key " + section + "." + key);
      const std::string v = node.data();
      const std::string name = section + "." + key;
      if (section == "build") {
        if (key == "compiler") {
          // Bare names are looked up on PATH when the build runs.
          c.build.compiler = v.find('/') == std::string::npos ? v : resolve(base, v).string();
        } else if (key == "args") {
          c.build.fixed_args = words(v);
        } else if (key == "sources") {
          c.build.sources = words(v);
        } else if (key == "output") {
          c.build.output_template = v;
        } else if (key == "timeout_ms") {
          c.build.timeout = std::chrono::milliseconds(number<long long>(name, v));
        } else if (key == "workdir") {
          c.build.workdir = resolve(base, v);
        } else if (key == "env") {
          c.build.env_allowlist = words(v);
        }
      } else if (section == "flags") {
        c.catalog = resolve(base, v);
        have_catalog = true;
      } else if (section == "ga") {
        if (key == "population_size") c.ga.population_size = number<std::size_t>(name, v);
        else if (key == "mutation_rate") c.ga.mutation_rate = number<double>(name, v);
        else if (key == "crossover_rate") c.ga.crossover_rate = number<double>(name, v);
        else if (key == "must_mutate_count") c.ga.must_mutate_count = number<std::size_t>(name, v);
        else if (key == "crossover_strength") c.ga.crossover_strength = number<double>(name, v);
        else if (key == "elite_count") c.ga.elite_count = number<std::size_t>(name, v);
        else if (key == "seed") c.ga.seed = number<std::uint64_t>(name, v);
      } else if (section == "stop") {
        if (key == "max_iterations") {
          if (v == "none") c.stop.max_iterations.reset();
          else c.stop.max_iterations = number<std::uint64_t>(name, v);
        } else if (key == "max_wall_clock_ms") {
          if (v == "none") c.stop.max_wall_clock.reset();
          else c.stop.max_wall_clock = std::chrono::milliseconds(number<long long>(name, v));
        } else if (key == "plateau_threshold") {
          c.stop.plateau_threshold = number<double>(name, v);
        } else if (key == "plateau_window") {
          c.stop.plateau_window = number<std::size_t>(name, v);
        }
      } else if (section == "fitness") {
        try {
          if (key == "extraction") c.extraction = parse_mode(v);
          else if (key == "compressor") c.compressor = CompressorId::parse(v);
          else if (key == "baseline") c.baseline = words(v);
        } catch (const Error& e) {
          throw ConfigError("bad value for " + name + ": " + e.what());
        }
      } else if (section == "log") {
        if (key == "timing") c.record_timing = boolean(name, v);
        else if (key == "sync") c.sync = boolean(name, v);
      }
    }
  }

  if (!have_catalog) throw ConfigError("missing flags.catalog");
  require_exists("flags.catalog", c.catalog);
  require_exists("build.workdir", c.build.workdir);
  for (const std::string& s : c.build.sources) require_exists("build.sources", c.build.workdir / s);
  c.build.validate();
  c.stop.validate();
  return c;
}

SessionConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_config(text, std::filesystem::absolute(path).parent_path());
}

Chromosome baseline_chromosome(const SessionConfig& config, const FlagSpace& space,
                               const ConstraintSet& constraints) {
  std::size_t level = space.find_level("-O0").value_or(0);
  Chromosome c = Chromosome::off(level, space.size());
  if (!config.baseline.empty()) {
    auto lvl = space.find_level(config.baseline.front());
    if (!lvl) throw ConfigError("baseline level '" + config.baseline.front() + "' is not in the catalog");
    c.base_level = *lvl;
    for (std::size_t i = 1; i < config.baseline.size(); ++i) {
      auto f = space.find_flag(config.baseline[i]);
      if (!f) throw ConfigError("baseline flag '" + config.baseline[i] + "' is not in the catalog");
      c.genes[*f] = true;
    }
  }
  return repair(std::move(c), constraints);
}

}  // namespace difftune
