// SPDX-License-Identifier: Apache-2.0
#include "sentemb/format.hpp"

#include <array>
#include <charconv>

SENTEMB_NAMESPACE_BEGIN

std::string format_shortest(double value) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

std::string format_shortest(float value) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

SENTEMB_NAMESPACE_END
