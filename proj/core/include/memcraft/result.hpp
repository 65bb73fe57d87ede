#pragma once

#include <stdexcept>
#include <utility>
#include <variant>

namespace memcraft {

// Value-or-error for operations whose failure is an expected outcome
// (agent output parsing, reference resolution).
template <class T, class E>
class Result {
 public:
  Result(T value) : state_(std::in_place_index<0>, std::move(value)) {}  // NOLINT
  Result(E error) : state_(std::in_place_index<1>, std::move(error)) {}  // NOLINT

  bool ok() const { return state_.index() == 0; }
  explicit operator bool() const { return ok(); }

  const T& value() const& { return checked_value(); }
  T& value() & { return const_cast<T&>(checked_value()); }
  T&& value() && { return std::move(const_cast<T&>(checked_value())); }

  const E& error() const {
    if (ok()) throw std::logic_error("Result::error() on a success value");
    return std::get<1>(state_);
  }

 private:
  const T& checked_value() const {
    if (!ok()) throw std::logic_error("Result::value() on an error value");
    return std::get<0>(state_);
  }

  std::variant<T, E> state_;
};

}  // namespace memcraft
