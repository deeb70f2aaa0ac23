// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "sentemb/real.hpp"

SENTEMB_NAMESPACE_BEGIN

/// NLI classes with their fixed class ids.
enum class NliLabel : std::int32_t { entailment = 0, contradiction = 1, neutral = 2 };

inline constexpr std::size_t kNliClasses = 3;

std::string_view to_string(NliLabel label);
/// Returns nullopt for anything outside the three class names.
std::optional<NliLabel> parse_nli_label(std::string_view name);

inline constexpr double kMaxScore = 5.0;

/// Two raw sentences with either a similarity score in [0, 5] or an NLI class.
struct SentencePair {
  std::string sentence_a;
  std::string sentence_b;
  std::optional<double> score;
  std::optional<NliLabel> label;

  static SentencePair scored(std::string a, std::string b, double score);
  static SentencePair labeled(std::string a, std::string b, NliLabel label);
};

SENTEMB_NAMESPACE_END
