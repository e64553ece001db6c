#pragma once

#include <stdexcept>
#include <string>

namespace hss {

// Bad inputs, malformed configs, violated preconditions. CLI exit code 2.
class validation_error : public std::runtime_error {
  public:
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// An exhaustive enumeration would exceed its declared budget. Enumerators
// fail loudly rather than degrade to sampling. CLI exit code 3.
class budget_error : public std::runtime_error {
  public:
    explicit budget_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hss
