#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pccnmf {

enum class ErrorKind {
  configuration,
  format,
  parameter,
  degenerate_input,
  undefined_correlation,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base for every error raised by the library. The kind lets the CLI map
/// failures onto exit codes and JSON error objects without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigurationError : public Error {
 public:
  explicit ConfigurationError(const std::string& what)
      : Error(ErrorKind::configuration, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what)
      : Error(ErrorKind::format, what) {}
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what)
      : Error(ErrorKind::parameter, what) {}
};

class DegenerateInputError : public Error {
 public:
  explicit DegenerateInputError(const std::string& what)
      : Error(ErrorKind::degenerate_input, what) {}
};

class UndefinedCorrelationError : public Error {
 public:
  explicit UndefinedCorrelationError(const std::string& what)
      : Error(ErrorKind::undefined_correlation, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

using WarningHandler = std::function<void(std::string_view)>;

/// Installs the sink for non-fatal diagnostics (rank reductions, truncated
/// clusters, no-op rescales). The default writes to stderr. Returns the
/// previous handler.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace pccnmf
