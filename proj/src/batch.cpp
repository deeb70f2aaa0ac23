// SPDX-License-Identifier: Apache-2.0
#include "sentemb/batch.hpp"

#include <algorithm>

#include "sentemb/errors.hpp"

SENTEMB_NAMESPACE_BEGIN

TokenizedBatch TokenizedBatch::gather(std::span<const std::vector<std::int32_t>> sequences,
                                      std::span<const std::size_t> index) {
  if (index.empty()) throw InputError("empty batch");
  TokenizedBatch out;
  out.batch = index.size();
  for (auto i : index) {
    if (sequences[i].empty()) throw InputError("empty token sequence in batch");
    out.length = std::max(out.length, sequences[i].size());
  }
  out.ids.assign(out.batch * out.length, token_id::pad);
  out.mask = Mask(out.batch, out.length, 0);
  for (std::size_t b = 0; b < out.batch; ++b) {
    const auto& seq = sequences[index[b]];
    for (std::size_t t = 0; t < seq.size(); ++t) {
      out.ids[b * out.length + t] = seq[t];
      out.mask.valid[b * out.length + t] = seq[t] == token_id::pad ? 0 : 1;
    }
  }
  return out;
}

TokenizedBatch TokenizedBatch::from_sequences(std::span<const std::vector<std::int32_t>> sequences) {
  std::vector<std::size_t> index(sequences.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
  return gather(sequences, index);
}

SENTEMB_NAMESPACE_END
