// SPDX-License-Identifier: Apache-2.0
#include "sentemb/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "sentemb/config_json.hpp"
#include "sentemb/errors.hpp"

SENTEMB_NAMESPACE_BEGIN

namespace {

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

template <typename U>
U get_le(const std::uint8_t* p) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(p[i]) << (8 * i);
  return value;
}

struct TensorEntry {
  std::string name;
  Shape shape;
  std::uint64_t offset = 0;
  std::uint64_t bytes = 0;
};

std::vector<TensorEntry> read_entries(const Json& tensors) {
  if (!tensors.is_array()) throw FormatError("checkpoint header: 'tensors' must be an array");
  std::vector<TensorEntry> entries;
  for (const auto& t : tensors) {
    if (!t.is_object() || !t.contains("name") || !t["name"].is_string() || !t.contains("shape") ||
        !t["shape"].is_array() || !t.contains("offset") || !t["offset"].is_number_unsigned())
      throw FormatError("checkpoint header: malformed tensor entry");
    TensorEntry e;
    e.name = t["name"].get<std::string>();
    e.offset = t["offset"].get<std::uint64_t>();
    std::uint64_t numel = 1;
    for (const auto& d : t["shape"]) {
      if (!d.is_number_unsigned() || d.get<std::uint64_t>() == 0)
        throw FormatError("checkpoint header: bad shape for tensor '" + e.name + "'");
      const auto dim = d.get<std::uint64_t>();
      if (numel > (std::uint64_t{1} << 40) / dim) throw CorruptionError("tensor '" + e.name + "' is implausibly large");
      numel *= dim;
      e.shape.push_back(static_cast<std::size_t>(dim));
    }
    e.bytes = numel * sizeof(float);
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const SiameseModel& model, const Vocab& vocab, const TrainConfig& train,
                                               const TokenizerOptions& tokenizer) {
  const ParamList params = model.parameters();
  Json tensors = Json::array();
  std::uint64_t offset = 0;
  for (const auto& p : params) {
    tensors.push_back(Json{{"name", p.name}, {"shape", p.tensor.shape()}, {"offset", offset}});
    offset += p.tensor.numel() * sizeof(float);
  }
  Json header{{"encoder", to_json(model.encoder().config())},
              {"head", to_json(model.head().config())},
              {"train", to_json(train)},
              {"tokenizer", to_json(tokenizer)},
              {"vocab", vocab.words()},
              {"has_classifier", model.has_classifier()},
              {"dtype", "float32"},
              {"tensors", std::move(tensors)}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(16 + text.size() + offset);
  out.insert(out.end(), std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& p : params)
    for (Real x : p.tensor.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  return out;
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw FormatError("not a checkpoint: bad magic");
  if (bytes.size() < 16) throw CorruptionError("checkpoint truncated inside the preamble");
  const auto version = get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto header_len = get_le<std::uint64_t>(bytes.data() + 8);
  if (header_len > bytes.size() - 16) throw CorruptionError("checkpoint header length exceeds file size");

  Json header;
  try {
    header = Json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  for (const char* key : {"encoder", "head", "train", "tokenizer", "vocab", "has_classifier", "tensors"})
    if (!header.is_object() || !header.contains(key)) throw FormatError(std::string("checkpoint header lacks '") + key + "'");

  EncoderConfig enc;
  PoolingConfig head;
  TrainConfig train;
  TokenizerOptions tok;
  std::vector<std::string> words;
  try {
    read_json(header["encoder"], enc);
    read_json(header["head"], head);
    read_json(header["train"], train);
    read_json(header["tokenizer"], tok);
    words = header["vocab"].get<std::vector<std::string>>();
    enc.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  if (!header["has_classifier"].is_boolean()) throw FormatError("checkpoint header: has_classifier must be a boolean");

  Vocab vocab(std::move(words));
  if (vocab.size() > enc.vocab_size)
    throw FormatError("checkpoint vocabulary is larger than the encoder's token table");
  SiameseModel model(enc, head, header["has_classifier"].get<bool>());

  auto entries = read_entries(header["tensors"]);
  const std::uint64_t payload_size = bytes.size() - 16 - header_len;
  const std::uint8_t* payload = bytes.data() + 16 + header_len;

  std::vector<const TensorEntry*> by_offset;
  for (const auto& e : entries) {
    if (e.offset > payload_size || e.bytes > payload_size - e.offset)
      throw CorruptionError("tensor '" + e.name + "' extends past the end of the payload");
    by_offset.push_back(&e);
  }
  std::sort(by_offset.begin(), by_offset.end(),
            [](const TensorEntry* a, const TensorEntry* b) { return a->offset < b->offset; });
  std::uint64_t cursor = 0;
  for (const auto* e : by_offset) {
    if (e->offset < cursor) throw CorruptionError("tensor '" + e->name + "' overlaps another tensor");
    if (e->offset > cursor) throw CorruptionError("gap in checkpoint payload before tensor '" + e->name + "'");
    cursor = e->offset + e->bytes;
  }
  if (cursor != payload_size)
    throw CorruptionError("checkpoint has " + std::to_string(payload_size - cursor) + " trailing bytes");

  std::map<std::string, const TensorEntry*> by_name;
  for (const auto& e : entries)
    if (!by_name.emplace(e.name, &e).second) throw CorruptionError("tensor '" + e.name + "' listed twice");

  ParamList params = model.parameters();
  if (params.size() != entries.size())
    throw CorruptionError("checkpoint lists " + std::to_string(entries.size()) + " tensors, model has " +
                          std::to_string(params.size()));
  for (auto& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw CorruptionError("checkpoint lacks tensor '" + p.name + "'");
    const TensorEntry& e = *it->second;
    if (e.shape != p.tensor.shape())
      throw CorruptionError("tensor '" + p.name + "' has shape " + shape_string(e.shape) + ", model expects " +
                            shape_string(p.tensor.shape()));
    auto dst = p.tensor.data();
    const std::uint8_t* src = payload + e.offset;
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst[i] = static_cast<Real>(std::bit_cast<float>(get_le<std::uint32_t>(src + 4 * i)));
  }
  return Checkpoint{std::move(model), std::move(vocab), train, tok};
}

void save_checkpoint(const std::filesystem::path& path, const SiameseModel& model, const Vocab& vocab,
                     const TrainConfig& train, const TokenizerOptions& tokenizer) {
  const auto bytes = serialize_checkpoint(model, vocab, train, tokenizer);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw InputError("failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw InputError("cannot move checkpoint into place at " + path.string());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

SENTEMB_NAMESPACE_END
