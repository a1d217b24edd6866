#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cogrowth {

// Invalid user input or violated precondition. The CLI maps this to exit code 2.
class validation_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation stopped because it would exceed its memory budget.
// The CLI maps this to exit code 3.
class budget_exceeded : public std::runtime_error {
 public:
  budget_exceeded(const std::string& what, std::size_t layer_reached)
      : std::runtime_error(what), layer_reached_(layer_reached) {}

  std::size_t layer_reached() const noexcept { return layer_reached_; }

 private:
  std::size_t layer_reached_;
};

}  // namespace cogrowth
