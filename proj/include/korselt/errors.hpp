#pragma once

#include <stdexcept>
#include <string>

namespace korselt {

// Invalid arguments, malformed input, failed preconditions. CLI exit code 1.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// A configured resource ceiling was exceeded (sieve range, factoring effort,
// enumeration size, ...). CLI exit code 2.
class budget_error : public std::runtime_error {
public:
    explicit budget_error(const std::string& what) : std::runtime_error(what) {}
};

// A property that is guaranteed by construction failed to hold. CLI exit code 3.
class consistency_error : public std::runtime_error {
public:
    explicit consistency_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace korselt
