#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>

namespace fieldguard {

/// Virtual time in microseconds. The event loop owns the clock; nothing in
/// the core ever reads wall-clock time.
using Us = std::int64_t;

constexpr Us kMillisecond = 1'000;
constexpr Us kSecond = 1'000'000;

/// Simulation wiring errors (misconfigured topology, time regression).
/// These are programmer/config errors, not protocol outcomes.
class SimError : public std::runtime_error {
public:
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

/// Minimal ok-or-error carrier used by the codec and channel hot paths.
template <class T, class E>
class Result {
public:
  Result(T value) : v_(std::move(value)) {}  // NOLINT: implicit by design
  Result(E error) : v_(std::move(error)) {}  // NOLINT
  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }
  const T& value() const& { return std::get<T>(v_); }
  T&& value() && { return std::get<T>(std::move(v_)); }
  const E& error() const { return std::get<E>(v_); }

private:
  std::variant<T, E> v_;
};

}  // namespace fieldguard
