// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sentemb/siamese.hpp"
#include "sentemb/training.hpp"
#include "sentemb/vocab.hpp"

SENTEMB_NAMESPACE_BEGIN

/// Binary layout, all integers little-endian:
///
///   bytes 0-3    "MSIM"
///   bytes 4-7    u32 format version (1)
///   bytes 8-15   u64 header length in bytes
///   header       JSON: encoder, head, train and tokenizer configs, the
///                vocabulary, and {name, shape, offset} per tensor, offsets
///                relative to the start of the payload
///   payload      row-major IEEE-754 float32 tensors, back to back
///
/// Every model parameter appears exactly once and the tensors tile the
/// payload with no gaps or overlap.
inline constexpr char kCheckpointMagic[4] = {'M', 'S', 'I', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  SiameseModel model;
  Vocab vocab;
  TrainConfig train;
  TokenizerOptions tokenizer;
};

/// Serializes to bytes. Doubles are narrowed to float32 in a 64-bit build.
std::vector<std::uint8_t> serialize_checkpoint(const SiameseModel& model, const Vocab& vocab, const TrainConfig& train,
                                               const TokenizerOptions& tokenizer);

/// Rebuilds a checkpoint. FormatError for a bad magic, version or header;
/// CorruptionError when tensor offsets are out of bounds, overlap, leave gaps
/// or trailing bytes, or do not match the model's parameters.
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

/// Writes to a sibling temporary file, then renames it over `path`.
void save_checkpoint(const std::filesystem::path& path, const SiameseModel& model, const Vocab& vocab,
                     const TrainConfig& train, const TokenizerOptions& tokenizer);

Checkpoint load_checkpoint(const std::filesystem::path& path);

SENTEMB_NAMESPACE_END
