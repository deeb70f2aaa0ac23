// SPDX-License-Identifier: Apache-2.0
#include "sentemb/pairs.hpp"

#include "sentemb/errors.hpp"

SENTEMB_NAMESPACE_BEGIN

std::string_view to_string(NliLabel label) {
  switch (label) {
    case NliLabel::entailment:
      return "entailment";
    case NliLabel::contradiction:
      return "contradiction";
    case NliLabel::neutral:
      return "neutral";
  }
  return "unknown";
}

std::optional<NliLabel> parse_nli_label(std::string_view name) {
  if (name == "entailment") return NliLabel::entailment;
  if (name == "contradiction") return NliLabel::contradiction;
  if (name == "neutral") return NliLabel::neutral;
  return std::nullopt;
}

SentencePair SentencePair::scored(std::string a, std::string b, double score) {
  if (!(score >= 0.0 && score <= kMaxScore)) throw InputError("similarity score must lie in [0, 5]");
  return {std::move(a), std::move(b), score, std::nullopt};
}

SentencePair SentencePair::labeled(std::string a, std::string b, NliLabel label) {
  return {std::move(a), std::move(b), std::nullopt, label};
}

SENTEMB_NAMESPACE_END
