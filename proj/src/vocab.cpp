// SPDX-License-Identifier: Apache-2.0
#include "sentemb/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "sentemb/errors.hpp"

SENTEMB_NAMESPACE_BEGIN

namespace {

const std::vector<std::string> kReserved = {"[PAD]", "[CLS]", "[SEP]", "[UNK]"};

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

}  // namespace

Vocab::Vocab() : tokens_(kReserved) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<std::int32_t>(i));
}

Vocab::Vocab(std::vector<std::string> words) : Vocab() {
  for (auto& w : words) {
    if (w.empty()) throw FormatError("vocab: empty token at id " + std::to_string(tokens_.size()));
    if (!index_.emplace(w, static_cast<std::int32_t>(tokens_.size())).second)
      throw FormatError("vocab: duplicate token '" + w + "'");
    tokens_.push_back(std::move(w));
  }
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open vocab file " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    words.push_back(line);
  }
  return Vocab(std::move(words));
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write vocab file " + path.string());
  for (std::size_t i = token_id::first_word; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

Vocab Vocab::build(std::span<const std::string> sentences, std::size_t max_words, bool lowercase) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences)
    for (auto& w : normalize_words(s, lowercase)) ++counts[w];
  for (const auto& r : kReserved) counts.erase(r);
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (max_words > 0 && ranked.size() > max_words) ranked.resize(max_words);
  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& [w, n] : ranked) words.push_back(w);
  return Vocab(std::move(words));
}

std::int32_t Vocab::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? token_id::unk : it->second;
}

const std::string& Vocab::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) throw InputError("vocab id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::string> Vocab::words() const {
  return {tokens_.begin() + token_id::first_word, tokens_.end()};
}

std::vector<std::string> normalize_words(std::string_view sentence, bool lowercase) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char ch : sentence) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      words.emplace_back(1, ch);
    } else {
      current.push_back(lowercase && c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    }
  }
  flush();
  return words;
}

std::vector<std::int32_t> encode_sentence(const Vocab& vocab, std::string_view sentence,
                                          const TokenizerOptions& options) {
  if (options.max_len < 3) throw ConfigError("tokenizer max_len must be at least 3");
  const auto words = normalize_words(sentence, options.lowercase);
  if (words.empty()) throw InputError("sentence is empty after normalization");
  const std::size_t kept = std::min(words.size(), options.max_len - 2);
  std::vector<std::int32_t> ids;
  ids.reserve(kept + 2);
  ids.push_back(token_id::cls);
  for (std::size_t i = 0; i < kept; ++i) ids.push_back(vocab.id(words[i]));
  ids.push_back(token_id::sep);
  return ids;
}

Tokenized tokenize(const Vocab& vocab, std::string_view sentence, std::size_t t_max, bool lowercase) {
  auto ids = encode_sentence(vocab, sentence, {t_max, lowercase});
  Tokenized out;
  out.mask.assign(t_max, 0);
  std::fill_n(out.mask.begin(), ids.size(), std::uint8_t{1});
  ids.resize(t_max, token_id::pad);
  out.ids = std::move(ids);
  return out;
}

SENTEMB_NAMESPACE_END
