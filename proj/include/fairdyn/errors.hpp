#pragma once

#include <stdexcept>
#include <string>

namespace fairdyn {

enum class Errc {
  negative_entry,
  row_sum_violation,
  dimension_mismatch,
  not_convergent,
  numerical_failure,
  wrong_variant,
  degenerate_group,
  unknown_preset,
  schema_error,
  invariant_violation,
  empty_dataset,
  empty_qualified_group,
  invalid_argument,
};

const char* errc_name(Errc code);

/// Single exception type for the whole library; the code tells callers what
/// went wrong, the message carries the offending indices/values.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

}  // namespace fairdyn
