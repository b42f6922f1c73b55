#pragma once

#include <stdexcept>
#include <string>

namespace cogtools {

// Root of the library's error hierarchy. Callers that only need coarse
// handling can catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration: flags, config file, missing interpreter.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Prompt catalog problems: unknown template id, missing placeholder binding,
// digest mismatch against the compiled-in manifest.
class PromptError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// A registered tool was called but its argument literal cannot be parsed.
class MalformedArgumentsError : public ParseError {
 public:
  using ParseError::ParseError;
};

class UnterminatedFenceError : public ParseError {
 public:
  using ParseError::ParseError;
};

class GatewayError : public Error {
 public:
  enum class Kind {
    transport,         // network failure or retryable HTTP status, retries exhausted
    auth,              // credential rejection, never retried
    malformed,         // response did not match the wire schema
    script_mismatch,   // scripted step matcher rejected the request
    script_exhausted,  // scripted steps ran out
  };

  GatewayError(Kind kind, const std::string& what, int attempts = 1)
      : Error(what), kind(kind), attempts(attempts) {}

  Kind kind;
  int attempts;
};

// A cognitive tool could not resolve a required input.
class ToolInputError : public Error {
 public:
  ToolInputError(const std::string& input_name, const std::string& what)
      : Error(what), input_name(input_name) {}

  std::string input_name;
};

// A cognitive tool failed in a way that is not the caller's fault but is not
// fatal to the episode either (e.g. no code block in a use_code reply).
class ToolError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class ReportError : public Error {
 public:
  using Error::Error;
};

class StatsError : public Error {
 public:
  using Error::Error;
};

}  // namespace cogtools
