#pragma once

#include <stdexcept>
#include <string>

namespace riq {

enum class ErrorCode {
    invalid_argument,
    missing_file,
    manifest_mismatch,
    non_finite_weight,
    io_failure,
    empty_arch,
    shape_mismatch,
    zero_output_norm,
    zero_vector,
    non_positive_delta,
    zero_norm_layer,
    degenerate_range,
    too_few_samples,
    empty_input,
    eps0_out_of_range,
    unsatisfiable,
    budget_out_of_range,
    alphabet_too_large,
    symbol_not_in_table,
    corrupt_stream,
    archive_mismatch,
    bad_magic,
    version_unsupported,
    checksum_mismatch,
    degenerate_fit,
    dimension_too_large,
    unknown_layer,
};

const char *to_string(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail),
          code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &detail) {
    throw Error(code, detail);
}

inline void require(bool ok, ErrorCode code, const std::string &detail) {
    if (!ok)
        fail(code, detail);
}

} // namespace riq
