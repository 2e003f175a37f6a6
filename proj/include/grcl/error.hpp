#pragma once

#include <stdexcept>
#include <string>

namespace grcl {

enum class Errc {
  dimension,
  degenerate_input,
  contract_violation,
  missing_entry,
  insufficient_negatives,
  numeric,
  invalid_config,
  io,
};

const char* errc_name(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so that
/// the C API can translate it without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, Errc code, const char* what) {
  if (!cond) fail(code, what);
}

}  // namespace grcl
