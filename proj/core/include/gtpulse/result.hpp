#pragma once

#include <cassert>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace gtpulse {

// Every declared failure mode across the library. Hot paths (packet parsing,
// flow matching) report through Result instead of throwing so they stay total
// under arbitrary input.
enum class Errc {
  // codec
  too_short,
  bad_version,
  length_mismatch,
  payload_too_large,
  // flow tracker
  negative_interval,
  pending_overflow,
  out_of_order,
  // trace replay
  corrupt_record,
  // metrics
  empty_input,
  size_mismatch,
  unknown_label,
  degenerate_class,
  invalid_scores,
  // dataset / models
  missing_label_column,
  empty_after_cleaning,
  degenerate_data,
  dimension_mismatch,
  // analytics service
  malformed_report,
  unknown_teid,
  insufficient_data,
  no_model_loaded,
  unclassified,
  endpoint_unreachable,
  non_2xx_response,
  // configuration / io
  io_error,
  bad_config,
};

std::string_view errc_name(Errc code);

struct Error {
  Errc code;
  std::string message;
};

inline Error make_error(Errc code, std::string message = {}) {
  if (message.empty()) message = std::string(errc_name(code));
  return Error{code, std::move(message)};
}

template <typename T>
class [[nodiscard]] Result {
 public:
  Result(T value) : v_(std::move(value)) {}
  Result(Error err) : v_(std::move(err)) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& {
    assert(ok());
    return std::get<T>(v_);
  }
  T& value() & {
    assert(ok());
    return std::get<T>(v_);
  }
  T&& value() && {
    assert(ok());
    return std::get<T>(std::move(v_));
  }

  const Error& error() const {
    assert(!ok());
    return std::get<Error>(v_);
  }
  Errc code() const { return error().code; }

 private:
  std::variant<T, Error> v_;
};

// Result for operations with no payload.
class [[nodiscard]] Status {
 public:
  Status() = default;
  Status(Error err) : err_(std::move(err)), failed_(true) {}

  bool ok() const { return !failed_; }
  explicit operator bool() const { return ok(); }
  const Error& error() const {
    assert(failed_);
    return err_;
  }
  Errc code() const { return error().code; }

 private:
  Error err_{};
  bool failed_ = false;
};

}  // namespace gtpulse
