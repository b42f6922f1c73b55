#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace cogtools {

struct ExecutionLimits {
  std::chrono::milliseconds timeout{10000};
  std::size_t output_cap_bytes = 16 * 1024;
};

struct ExecutionResult {
  enum class Status { ok, nonzero, timeout, spawn_failure };

  std::string stdout_text;
  std::string stderr_text;
  Status status = Status::ok;
  int exit_code = 0;  // meaningful for nonzero (128+signal when signaled)
  std::chrono::milliseconds wall_time{0};
  bool stdout_truncated = false;
  bool stderr_truncated = false;

  bool ok() const { return status == Status::ok; }
  // One-line description of a failure, used for retry prompts and
  // observations.
  std::string failure_text() const;
};

// Runs untrusted snippets under the configured interpreter. Each execution
// writes the code to a fresh temp file, runs it in an empty working
// directory with a scrubbed environment and no network (where the platform
// allows unsharing), and removes the directory afterwards. Concurrent
// executions are bounded by max_concurrency.
class CodeExecutor {
 public:
  struct Options {
    std::vector<std::string> interpreter = {"python3"};
    ExecutionLimits limits;
    int max_concurrency = 4;
    bool isolate_network = true;
  };

  explicit CodeExecutor(Options options);
  ~CodeExecutor();

  CodeExecutor(const CodeExecutor&) = delete;
  CodeExecutor& operator=(const CodeExecutor&) = delete;

  ExecutionResult execute(const std::string& code);
  ExecutionResult execute(const std::string& code, const ExecutionLimits& limits);

  // Runs a trivial snippet; throws ConfigError naming the interpreter when it
  // cannot be spawned. Call once at startup.
  void probe() const;

  const Options& options() const { return options_; }

 private:
  Options options_;
  struct Gate;
  std::unique_ptr<Gate> gate_;
};

}  // namespace cogtools
