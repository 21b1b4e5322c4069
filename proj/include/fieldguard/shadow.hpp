#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <tuple>

namespace fieldguard {

/// Last confirmed value per (device, family, point). Only commands that
/// passed verification (matched auth copy or positive master acknowledgement)
/// may be recorded; corrective emissions never write here.
class ShadowStore {
public:
  using Key = std::tuple<std::uint8_t, std::uint8_t, std::uint8_t>;

  std::optional<std::int32_t> lookup(std::uint8_t device, std::uint8_t family,
                                     std::uint8_t point) const {
    auto it = values_.find({device, family, point});
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  void record(std::uint8_t device, std::uint8_t family, std::uint8_t point,
              std::int32_t value) {
    values_[{device, family, point}] = value;
  }

  const std::map<Key, std::int32_t>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  friend bool operator==(const ShadowStore&, const ShadowStore&) = default;

private:
  std::map<Key, std::int32_t> values_;
};

}  // namespace fieldguard
