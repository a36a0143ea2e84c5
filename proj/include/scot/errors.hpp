#pragma once

#include <stdexcept>
#include <string>

namespace scot {

/// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct cycle_detected : error {
    explicit cycle_detected(const std::string& what) : error(what) {}
};

struct domain_violation : error {
    explicit domain_violation(const std::string& what) : error(what) {}
};

struct grid_too_large : error {
    explicit grid_too_large(const std::string& what) : error(what) {}
};

struct dimension_mismatch : error {
    explicit dimension_mismatch(const std::string& what) : error(what) {}
};

struct instance_too_large : error {
    explicit instance_too_large(const std::string& what) : error(what) {}
};

struct coordinate_count_mismatch : error {
    explicit coordinate_count_mismatch(const std::string& what) : error(what) {}
};

struct axis_out_of_range : error {
    explicit axis_out_of_range(const std::string& what) : error(what) {}
};

struct rank_deficient : error {
    explicit rank_deficient(const std::string& what) : error(what) {}
};

struct unsupported : error {
    explicit unsupported(const std::string& what) : error(what) {}
};

/// Raised by config / input-file parsing; the message carries the field path.
struct config_error : error {
    explicit config_error(const std::string& what) : error(what) {}
};

}  // namespace scot
