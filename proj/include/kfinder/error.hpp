#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace kfinder {

/// Failure raised by library routines. `code()` is a short stable tag such as
/// "empty-subset" or "no-acceptable-w"; `what()` adds a human readable detail.
class Error : public std::runtime_error {
 public:
  explicit Error(std::string code, const std::string& detail = {})
      : std::runtime_error(detail.empty() ? code : code + ": " + detail),
        code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace kfinder
