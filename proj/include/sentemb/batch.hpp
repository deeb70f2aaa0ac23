// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sentemb/tensor.hpp"

SENTEMB_NAMESPACE_BEGIN

/// Reserved vocabulary ids shared by the tokenizer and the encoder.
namespace token_id {
inline constexpr std::int32_t pad = 0;
inline constexpr std::int32_t cls = 1;
inline constexpr std::int32_t sep = 2;
inline constexpr std::int32_t unk = 3;
inline constexpr std::int32_t first_word = 4;
}  // namespace token_id

/// Token ids [B,T] with the matching validity mask. Rows are right-padded
/// with [PAD]; mask is 0 exactly where the id is [PAD].
struct TokenizedBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<std::int32_t> ids;
  Mask mask;

  /// Pads unpadded sequences to the longest one.
  static TokenizedBatch from_sequences(std::span<const std::vector<std::int32_t>> sequences);
  /// Same, selecting sequences[index[i]] for each i.
  static TokenizedBatch gather(std::span<const std::vector<std::int32_t>> sequences,
                               std::span<const std::size_t> index);

  std::span<const std::int32_t> row(std::size_t b) const { return std::span(ids).subspan(b * length, length); }
};

SENTEMB_NAMESPACE_END
