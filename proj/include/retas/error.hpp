#pragma once

#include <stdexcept>
#include <string>

namespace retas {

/// Bad or unreadable input: files, columns, config keys, catalog invariants.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical or model failure: domain violations, supercritical configs,
/// non-finite likelihoods.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace retas
