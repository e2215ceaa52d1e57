#pragma once

#include <stdexcept>
#include <string>

namespace votecert {

/// Base class for all toolkit errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input. The CLI maps these to exit code 2.
struct input_error : error {
    using error::error;
};

struct schema_error : input_error {
    using input_error::input_error;
};

struct inconsistent_shard_count : input_error {
    using input_error::input_error;
};

struct unknown_token : input_error {
    using input_error::input_error;
};

struct empty_table : input_error {
    empty_table() : input_error("vote table is empty") {}
};

struct missing_shard_votes : input_error {
    using input_error::input_error;
};

struct missing_target : input_error {
    using input_error::input_error;
};

struct horizon_exceeds_trace : input_error {
    using input_error::input_error;
};

struct length_mismatch : input_error {
    using input_error::input_error;
};

struct empty_test_set : input_error {
    empty_test_set() : input_error("metrics require at least one sample") {}
};

struct policy_mismatch : input_error {
    using input_error::input_error;
};

/// Internal invariant breach (certificate/oracle disagreement). Exit code 3.
struct invariant_error : error {
    using error::error;
};

/// Problem size exceeds the configured exact-solve limit. Exit code 4.
struct infeasible_size : error {
    using error::error;
};

/// Oracle input exceeds its tractability bound.
struct bound_exceeded : error {
    using error::error;
};

}  // namespace votecert
