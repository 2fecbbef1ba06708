#include "pccnmf/error.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace pccnmf {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::configuration:
      return "configuration";
    case ErrorKind::format:
      return "format";
    case ErrorKind::parameter:
      return "parameter";
    case ErrorKind::degenerate_input:
      return "degenerate_input";
    case ErrorKind::undefined_correlation:
      return "undefined_correlation";
    case ErrorKind::io:
      return "io";
  }
  return "unknown";
}

namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& handler() {
  static WarningHandler h = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return h;
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler next) {
  std::lock_guard lock(handler_mutex());
  return std::exchange(handler(), std::move(next));
}

void warn(std::string_view message) {
  std::lock_guard lock(handler_mutex());
  if (handler()) handler()(message);
}

}  // namespace pccnmf
