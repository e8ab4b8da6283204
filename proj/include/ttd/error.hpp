#pragma once

#include <stdexcept>
#include <string>

namespace ttd {

/// Shapes, ranks or mode lists that do not conform.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite values or a numerical kernel that failed.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File format or stream failures.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw DimensionError(what);
}

} // namespace detail
} // namespace ttd
