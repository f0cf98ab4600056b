#pragma once

#include <stdexcept>
#include <string>

namespace nftproj {

/// Failure categories surfaced by the library. The CLI maps these onto
/// process exit codes; see exit_code().
enum class Errc {
  parse_error,
  io_error,
  http_error,
  schema_error,
  non_sale_event,
  unknown_token,
  invalid_spec,
  rank_deficient,
  empty_collection,
  degenerate_range,
  shape_mismatch,
  non_finite,
  series_too_short,
  corrupt_checkpoint,
  length_mismatch,
  token_set_mismatch,
  zero_actual,
  config_error,
};

const char* errc_name(Errc c) noexcept;

/// Exit code contract: 1 for usage/config problems, 2 for data problems,
/// 3 for numeric failures.
int exit_code(Errc c) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace nftproj
