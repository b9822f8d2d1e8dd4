#include "testutil.h"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "planted.h"

extern char** environ;

namespace difftune::testing {

TempDir::TempDir() {
  std::string tmpl = (std::filesystem::temp_directory_path() / "difftune-test-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::string s = read_file(p);
  return {s.begin(), s.end()};
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

CommandResult run_command(const std::vector<std::string>& argv) {
  TempDir tmp;
  const auto out_path = tmp / "out";
  const auto err_path = tmp / "err";
  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_addopen(&fa, 1, out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_addopen(&fa, 2, err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  std::vector<std::string> copy = argv;
  std::vector<char*> cargv;
  for (auto& s : copy) cargv.push_back(s.data());
  cargv.push_back(nullptr);
  pid_t pid;
  int rc = ::posix_spawn(&pid, cargv[0], &fa, nullptr, cargv.data(), environ);
  posix_spawn_file_actions_destroy(&fa);
  CommandResult r;
  if (rc != 0) throw std::runtime_error("cannot spawn " + argv[0]);
  int status = 0;
  ::waitpid(pid, &status, 0);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  return r;
}

std::filesystem::path difftune_exe() { return DIFFTUNE_CLI; }
std::filesystem::path mockcc_exe() { return DIFFTUNE_MOCKCC; }

std::string planted_config(const std::filesystem::path& workdir, std::uint64_t ga_seed,
                           const std::string& stop_section, const std::string& extra) {
  write_file(workdir / "prog.c", "int main(void) { return 0; }\n");
  std::string cfg;
  cfg += "[build]\ncompiler = " + mockcc_exe().string() + "\n";
  cfg += "args = --seed " + std::to_string(kPlantedSeed) + "\n";
  cfg += "sources = prog.c\ntimeout_ms = 20000\n";
  cfg += "[flags]\ncatalog = " + (source_dir() / "data/catalogs/mock-planted.cat").string() + "\n";
  cfg += "[ga]\nseed = " + std::to_string(ga_seed) + "\n";
  cfg += "[stop]\n" + stop_section;
  cfg += "[log]\ntiming = off\n";
  cfg += extra;
  return cfg;
}

}  // namespace difftune::testing
