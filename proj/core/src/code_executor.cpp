#include "cogtools/code_executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "cogtools/errors.hpp"

namespace cogtools {

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;

  TempDir() {
    std::string pattern = (fs::temp_directory_path() / "cogtools-exec-XXXXXX").string();
    std::vector<char> buffer(pattern.begin(), pattern.end());
    buffer.push_back('\0');
    if (!mkdtemp(buffer.data())) {
      throw ConfigError(std::string{"mkdtemp failed: "} + std::strerror(errno));
    }
    path = buffer.data();
  }

  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct Pipe {
  int read_fd = -1;
  int write_fd = -1;

  Pipe() {
    int fds[2];
    if (pipe(fds) != 0) {
      throw ConfigError(std::string{"pipe failed: "} + std::strerror(errno));
    }
    read_fd = fds[0];
    write_fd = fds[1];
  }

  ~Pipe() {
    close_read();
    close_write();
  }

  void close_read() {
    if (read_fd >= 0) close(read_fd);
    read_fd = -1;
  }

  void close_write() {
    if (write_fd >= 0) close(write_fd);
    write_fd = -1;
  }
};

void append_capped(std::string& sink, bool& truncated, std::size_t cap,
                   const char* data, std::size_t size) {
  if (truncated) return;
  if (sink.size() + size <= cap) {
    sink.append(data, size);
    return;
  }
  sink.append(data, cap - sink.size());
  sink += "\n[truncated]";
  truncated = true;
}

ExecutionResult run_once(const std::vector<std::string>& interpreter,
                         const std::string& code, const ExecutionLimits& limits,
                         bool isolate_network) {
  ExecutionResult result;
  TempDir dir;
  const fs::path script = dir.path / "snippet.py";
  const fs::path workdir = dir.path / "work";
  {
    std::ofstream out(script, std::ios::binary);
    out << code;
    if (!code.empty() && code.back() != '\n') out << '\n';
    if (!out) {
      result.status = ExecutionResult::Status::spawn_failure;
      result.stderr_text = "cannot write the snippet file";
      return result;
    }
  }
  std::error_code ec;
  fs::create_directory(workdir, ec);

  Pipe out_pipe;
  Pipe err_pipe;
  Pipe errno_pipe;
  if (fcntl(errno_pipe.write_fd, F_SETFD, FD_CLOEXEC) != 0) {
    result.status = ExecutionResult::Status::spawn_failure;
    result.stderr_text = std::string{"fcntl failed: "} + std::strerror(errno);
    return result;
  }

  std::vector<std::string> argv_storage = interpreter;
  argv_storage.push_back(script.string());
  std::vector<char*> argv;
  for (auto& arg : argv_storage) argv.push_back(arg.data());
  argv.push_back(nullptr);

  std::vector<std::string> env_storage;
  if (const char* path = std::getenv("PATH")) {
    env_storage.push_back(std::string{"PATH="} + path);
  } else {
    env_storage.push_back("PATH=/usr/local/bin:/usr/bin:/bin");
  }
  env_storage.push_back("HOME=" + dir.path.string());
  if (const char* lang = std::getenv("LANG")) {
    env_storage.push_back(std::string{"LANG="} + lang);
  }
  if (const char* lc_all = std::getenv("LC_ALL")) {
    env_storage.push_back(std::string{"LC_ALL="} + lc_all);
  }
  env_storage.push_back("PYTHONDONTWRITEBYTECODE=1");
  std::vector<char*> envp;
  for (auto& entry : env_storage) envp.push_back(entry.data());
  envp.push_back(nullptr);

  const auto started = std::chrono::steady_clock::now();
  const pid_t pid = fork();
  if (pid < 0) {
    result.status = ExecutionResult::Status::spawn_failure;
    result.stderr_text = std::string{"fork failed: "} + std::strerror(errno);
    return result;
  }
  if (pid == 0) {
    setpgid(0, 0);
    if (isolate_network) {
      unshare(CLONE_NEWNET);  // best effort; needs privileges on most hosts
    }
    if (chdir(workdir.c_str()) != 0) _exit(127);
    dup2(out_pipe.write_fd, STDOUT_FILENO);
    dup2(err_pipe.write_fd, STDERR_FILENO);
    const int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);
    out_pipe.close_read();
    out_pipe.close_write();
    err_pipe.close_read();
    err_pipe.close_write();
    errno_pipe.close_read();
    execvpe(argv[0], argv.data(), envp.data());
    const int saved = errno;
    ssize_t ignored = write(errno_pipe.write_fd, &saved, sizeof(saved));
    (void)ignored;
    _exit(127);
  }

  setpgid(pid, pid);
  out_pipe.close_write();
  err_pipe.close_write();
  errno_pipe.close_write();

  int spawn_errno = 0;
  {
    const ssize_t n = read(errno_pipe.read_fd, &spawn_errno, sizeof(spawn_errno));
    if (n <= 0) spawn_errno = 0;
  }
  errno_pipe.close_read();
  if (spawn_errno != 0) {
    int status = 0;
    waitpid(pid, &status, 0);
    result.status = ExecutionResult::Status::spawn_failure;
    result.stderr_text =
        std::string{"cannot run "} + interpreter.front() + ": " + std::strerror(spawn_errno);
    return result;
  }

  const auto deadline = started + limits.timeout;
  bool out_open = true;
  bool err_open = true;
  bool killed = false;
  char buffer[4096];
  while (out_open || err_open) {
    struct pollfd fds[2];
    nfds_t nfds = 0;
    if (out_open) fds[nfds++] = {out_pipe.read_fd, POLLIN, 0};
    if (err_open) fds[nfds++] = {err_pipe.read_fd, POLLIN, 0};
    const auto now = std::chrono::steady_clock::now();
    if (!killed && now >= deadline) {
      kill(-pid, SIGKILL);
      killed = true;
    }
    const auto remaining = killed
                               ? std::chrono::milliseconds(100)
                               : std::chrono::duration_cast<std::chrono::milliseconds>(
                                     deadline - now);
    const int wait_ms =
        static_cast<int>(std::min<std::int64_t>(100, std::max<std::int64_t>(0, remaining.count())));
    const int ready = poll(fds, nfds, wait_ms);
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (nfds_t i = 0; i < nfds; ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      const bool is_out = fds[i].fd == out_pipe.read_fd;
      const ssize_t n = read(fds[i].fd, buffer, sizeof(buffer));
      if (n > 0) {
        if (is_out) {
          append_capped(result.stdout_text, result.stdout_truncated,
                        limits.output_cap_bytes, buffer, static_cast<std::size_t>(n));
        } else {
          append_capped(result.stderr_text, result.stderr_truncated,
                        limits.output_cap_bytes, buffer, static_cast<std::size_t>(n));
        }
      } else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
        if (is_out) {
          out_pipe.close_read();
          out_open = false;
        } else {
          err_pipe.close_read();
          err_open = false;
        }
      }
    }
  }

  // The child may have closed its pipes while still running; keep the
  // deadline in force until it is reaped.
  int status = 0;
  while (true) {
    const pid_t done = waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (done < 0 && errno != EINTR) break;
    if (!killed && std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      killed = true;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  kill(-pid, SIGKILL);  // sweep any stragglers left in the group
  result.wall_time = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);

  if (killed) {
    result.status = ExecutionResult::Status::timeout;
    result.exit_code = 128 + SIGKILL;
    return result;
  }
  if (WIFSIGNALED(status)) {
    result.status = ExecutionResult::Status::nonzero;
    result.exit_code = 128 + WTERMSIG(status);
    return result;
  }
  const int exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 127;
  result.exit_code = exit_code;
  result.status = exit_code == 0 ? ExecutionResult::Status::ok
                                 : ExecutionResult::Status::nonzero;
  return result;
}

}  // namespace

std::string ExecutionResult::failure_text() const {
  switch (status) {
    case Status::ok:
      return "";
    case Status::timeout:
      return "execution timed out after " + std::to_string(wall_time.count()) + " ms";
    case Status::spawn_failure:
      return "interpreter failed to start: " + stderr_text;
    case Status::nonzero: {
      std::string text = "exit code " + std::to_string(exit_code);
      // The last stderr line usually names the exception.
      std::string_view err = stderr_text;
      while (!err.empty() && (err.back() == '\n' || err.back() == '\r')) {
        err.remove_suffix(1);
      }
      const auto line_start = err.find_last_of('\n');
      const std::string_view last_line =
          line_start == std::string_view::npos ? err : err.substr(line_start + 1);
      if (!last_line.empty()) {
        text += ": ";
        text += last_line;
      }
      return text;
    }
  }
  return "";
}

struct CodeExecutor::Gate {
  std::mutex mutex;
  std::condition_variable cv;
  int available = 0;

  struct Slot {
    Gate* gate;

    explicit Slot(Gate* gate_in) : gate(gate_in) {
      std::unique_lock lock(gate->mutex);
      gate->cv.wait(lock, [&] { return gate->available > 0; });
      --gate->available;
    }

    ~Slot() {
      {
        std::lock_guard lock(gate->mutex);
        ++gate->available;
      }
      gate->cv.notify_one();
    }
  };
};

CodeExecutor::CodeExecutor(Options options)
    : options_(std::move(options)), gate_(std::make_unique<Gate>()) {
  if (options_.interpreter.empty()) {
    throw ConfigError("code executor needs an interpreter command");
  }
  if (options_.max_concurrency < 1) options_.max_concurrency = 1;
  gate_->available = options_.max_concurrency;
}

CodeExecutor::~CodeExecutor() = default;

ExecutionResult CodeExecutor::execute(const std::string& code) {
  return execute(code, options_.limits);
}

ExecutionResult CodeExecutor::execute(const std::string& code,
                                      const ExecutionLimits& limits) {
  Gate::Slot slot(gate_.get());
  return run_once(options_.interpreter, code, limits, options_.isolate_network);
}

void CodeExecutor::probe() const {
  ExecutionLimits limits;
  limits.timeout = std::chrono::milliseconds(10000);
  const ExecutionResult result =
      run_once(options_.interpreter, "print('ok')", limits, options_.isolate_network);
  if (result.status == ExecutionResult::Status::spawn_failure) {
    throw ConfigError("code interpreter \"" + options_.interpreter.front() +
                      "\" is not runnable: " + result.stderr_text);
  }
  if (!result.ok()) {
    throw ConfigError("code interpreter \"" + options_.interpreter.front() +
                      "\" failed its probe: " + result.failure_text());
  }
}

}  // namespace cogtools
