#pragma once

#include <stdexcept>
#include <string>

namespace lilchain {

/// Chain-spec document is malformed or violates a kernel/observable invariant.
class SpecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A linear solve or numerical invariant failed beyond tolerance.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Run configuration out of its documented bounds.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lilchain
