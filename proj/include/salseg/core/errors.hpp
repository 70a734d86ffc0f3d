#pragma once

#include <stdexcept>
#include <string>

namespace salseg {

// Bad inputs: malformed configs, violated preconditions, unusable datasets.
// The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Failures that occur mid-run (non-finite loss, unwritable outputs).
// The CLI maps these to exit code 2.
class RuntimeAbort : public std::runtime_error {
 public:
  explicit RuntimeAbort(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace salseg
