#include "difftune/driver.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <thread>

#include "difftune/digest.h"
#include "difftune/error.h"

extern char** environ;

namespace difftune {

namespace {

using Clock = std::chrono::steady_clock;

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  ~Fd() { reset(); }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  int get() const { return fd_; }

 private:
  int fd_ = -1;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InfrastructureError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> allowed_environment(const std::vector<std::string>& allowlist) {
  std::vector<std::string> env;
  for (const std::string& name : allowlist) {
    if (const char* v = std::getenv(name.c_str())) env.push_back(name + "=" + v);
  }
  return env;
}

std::vector<char*> c_strings(std::vector<std::string>& strings) {
  std::vector<char*> out;
  for (std::string& s : strings) out.push_back(s.data());
  out.push_back(nullptr);
  return out;
}

}  // namespace

void BuildManifest::validate() const {
  if (compiler.empty()) throw ConfigError("build manifest has no compiler");
  if (sources.empty()) throw ConfigError("build manifest has no sources");
  if (timeout.count() <= 0) throw ConfigError("build timeout must be positive");
  if (output_template.empty()) throw ConfigError("build output template is empty");
}

std::string BuildManifest::digest() const {
  std::string canon = "compiler\t" + compiler + "\n";
  auto list = [&canon](const char* key, const std::vector<std::string>& items) {
    canon += key;
    for (const std::string& s : items) canon += "\t" + s;
    canon += "\n";
  };
  list("args", fixed_args);
  list("sources", sources);
  canon += "output\t" + output_template + "\n";
  canon += "timeout_ms\t" + std::to_string(timeout.count()) + "\n";
  canon += "workdir\t" + workdir.string() + "\n";
  list("env", env_allowlist);
  return sha256_hex(canon);
}

std::filesystem::path output_path_for(const BuildManifest& manifest, const Chromosome& chromosome) {
  std::string dir = ".difftune-build/" + sha256_hex(chromosome.encode()).substr(0, 16);
  std::string out = manifest.output_template;
  for (auto pos = out.find("{dir}"); pos != std::string::npos; pos = out.find("{dir}", pos)) {
    out.replace(pos, 5, dir);
    pos += dir.size();
  }
  return out;
}

std::vector<std::string> render_command(const BuildManifest& manifest, const Chromosome& chromosome,
                                        const FlagSpace& space, const std::string& output) {
  std::vector<std::string> argv{manifest.compiler};
  argv.insert(argv.end(), manifest.fixed_args.begin(), manifest.fixed_args.end());
  for (std::string& tok : decode(chromosome, space)) argv.push_back(std::move(tok));
  argv.insert(argv.end(), manifest.sources.begin(), manifest.sources.end());
  argv.push_back("-o");
  argv.push_back(output);
  return argv;
}

std::vector<std::string> render_command(const BuildManifest& manifest, const Chromosome& chromosome,
                                        const FlagSpace& space) {
  return render_command(manifest, chromosome, space, output_path_for(manifest, chromosome).string());
}

CompileResult compile(const BuildManifest& manifest, const Chromosome& chromosome,
                      const FlagSpace& space) {
  manifest.validate();
  CompileResult result;
  const std::filesystem::path rel_out = output_path_for(manifest, chromosome);
  result.output_path = manifest.workdir / rel_out;
  std::error_code ec;
  std::filesystem::create_directories(result.output_path.parent_path(), ec);
  if (ec) throw InfrastructureError("cannot create " + result.output_path.parent_path().string());
  std::filesystem::remove(result.output_path, ec);

  std::vector<std::string> argv = render_command(manifest, chromosome, space, rel_out.string());
  std::vector<std::string> env = allowed_environment(manifest.env_allowlist);
  std::vector<char*> c_argv = c_strings(argv);
  std::vector<char*> c_env = c_strings(env);

  int pipefd[2];
  if (::pipe2(pipefd, O_CLOEXEC) != 0) throw InfrastructureError("pipe failed");
  Fd read_end(pipefd[0]);
  Fd write_end(pipefd[1]);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 0, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_adddup2(&actions, write_end.get(), 1);
  posix_spawn_file_actions_adddup2(&actions, write_end.get(), 2);
  const std::string workdir = manifest.workdir.empty() ? "." : manifest.workdir.string();
  posix_spawn_file_actions_addchdir_np(&actions, workdir.c_str());
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  const auto start = Clock::now();
  pid_t pid = 0;
  int rc = ::posix_spawnp(&pid, c_argv[0], &actions, &attr, c_argv.data(), c_env.data());
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  write_end.reset();
  if (rc != 0) {
    throw InfrastructureError("cannot run compiler '" + manifest.compiler + "': " + std::strerror(rc));
  }

  const auto deadline = start + manifest.timeout;
  bool timed_out = false;
  bool pipe_open = true;
  int wstatus = 0;
  bool reaped = false;
  char buf[4096];
  while (!reaped) {
    auto now = Clock::now();
    if (now >= deadline) {
      timed_out = true;
      break;
    }
    int wait_ms = static_cast<int>(
        std::min<long long>(50, std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1));
    if (pipe_open) {
      pollfd pfd{read_end.get(), POLLIN, 0};
      int pr = ::poll(&pfd, 1, wait_ms);
      if (pr > 0) {
        ssize_t n = ::read(read_end.get(), buf, sizeof buf);
        if (n > 0) {
          std::size_t room = kStderrExcerptBytes - std::min(kStderrExcerptBytes, result.stderr_excerpt.size());
          result.stderr_excerpt.append(buf, std::min<std::size_t>(room, static_cast<std::size_t>(n)));
        } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
          pipe_open = false;
        }
      }
    } else {
      std::this_thread::sleep_for(std::chrono::milliseconds(std::min(wait_ms, 5)));
    }
    pid_t w = ::waitpid(pid, &wstatus, WNOHANG);
    if (w == pid) reaped = true;
  }
  if (timed_out) {
    ::kill(-pid, SIGKILL);
    ::waitpid(pid, &wstatus, 0);
  } else {
    // Drain diagnostics the child wrote before exiting.
    for (;;) {
      pollfd pfd{read_end.get(), POLLIN, 0};
      if (!pipe_open || ::poll(&pfd, 1, 0) <= 0) break;
      ssize_t n = ::read(read_end.get(), buf, sizeof buf);
      if (n <= 0) break;
      std::size_t room = kStderrExcerptBytes - std::min(kStderrExcerptBytes, result.stderr_excerpt.size());
      result.stderr_excerpt.append(buf, std::min<std::size_t>(room, static_cast<std::size_t>(n)));
    }
  }
  result.duration = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start);

  if (timed_out) {
    result.status = CompileStatus::kTimeout;
  } else if (WIFEXITED(wstatus) && WEXITSTATUS(wstatus) == 127 &&
             result.stderr_excerpt.empty() && !std::filesystem::exists(result.output_path)) {
    // posix_spawnp reports exec failure this way on some libcs.
    throw InfrastructureError("cannot run compiler '" + manifest.compiler + "'");
  } else if (WIFEXITED(wstatus) && WEXITSTATUS(wstatus) == 0 &&
             std::filesystem::is_regular_file(result.output_path)) {
    result.status = CompileStatus::kOk;
    result.binary_digest = sha256_hex(read_file(result.output_path));
  } else {
    result.status = CompileStatus::kCompileError;
  }
  return result;
}

std::filesystem::path graph_sidecar(const std::filesystem::path& binary) {
  std::filesystem::path p = binary;
  p += ".graph";
  return p;
}

CompileFn make_compile_fn(BuildManifest manifest, FlagSpace space) {
  return [manifest = std::move(manifest), space = std::move(space)](const Chromosome& c) {
    CompileResult r = compile(manifest, c, space);
    BuildOutput out;
    out.status = r.status;
    out.duration = r.duration;
    if (r.status == CompileStatus::kOk) out.binary = read_file(r.output_path);
    std::error_code ec;
    std::filesystem::remove(r.output_path, ec);
    std::filesystem::remove(graph_sidecar(r.output_path), ec);
    std::filesystem::remove(r.output_path.parent_path(), ec);  // only if now empty
    return out;
  };
}

}  // namespace difftune
