// SPDX-License-Identifier: Apache-2.0
#include "sentemb/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"
#include "sentemb/errors.hpp"
#include "sentemb/format.hpp"
#include "sentemb/vocab.hpp"

SENTEMB_NAMESPACE_BEGIN

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    fields.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

double parse_score(const std::string& text, std::size_t line_no) {
  double value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last) throw DataError("score '" + text + "' is not a number", line_no);
  if (!(value >= 0.0 && value <= kMaxScore))
    throw DataError("score " + text + " outside [0, 5]", line_no);
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<SentencePair> load_stsb(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<SentencePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    std::size_t score_col = 0;
    if (fields.size() == 7) {
      score_col = 4;
    } else if (fields.size() == 3) {
      score_col = 0;
    } else {
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " columns (expected 7 or 3)");
    }
    const double score = parse_score(fields[score_col], line_no);
    pairs.push_back(SentencePair::scored(fields[score_col + 1], fields[score_col + 2], score));
  }
  return pairs;
}

void save_stsb(const std::filesystem::path& path, std::span<const SentencePair> pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& p : pairs) {
    if (!p.score) throw InputError("save_stsb: pair without a score");
    out << format_shortest(*p.score) << '\t' << p.sentence_a << '\t' << p.sentence_b << '\n';
  }
}

NliData load_nli(const std::filesystem::path& path) {
  auto in = open_input(path);
  NliData data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + " is not a JSON record");
    }
    auto field = [&](const char* key) -> std::string {
      if (!record.is_object() || !record.contains(key) || !record[key].is_string())
        throw FormatError(path.string() + ": line " + std::to_string(line_no) + " lacks string field " + key);
      return record[key].get<std::string>();
    };
    const std::string gold = field("gold_label");
    if (gold == "-") {
      ++data.skipped;
      continue;
    }
    const auto label = parse_nli_label(gold);
    if (!label) throw DataError("unknown NLI label '" + gold + "'", line_no);
    data.pairs.push_back(SentencePair::labeled(field("sentence1"), field("sentence2"), *label));
  }
  return data;
}

std::set<std::string> word_set(const std::string& sentence) {
  auto words = normalize_words(sentence);
  return {words.begin(), words.end()};
}

double jaccard_score(const std::string& a, const std::string& b) {
  const auto sa = word_set(a), sb = word_set(b);
  std::vector<std::string> common;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  const std::size_t uni = sa.size() + sb.size() - common.size();
  if (uni == 0) return kMaxScore;
  return kMaxScore * static_cast<double>(common.size()) / static_cast<double>(uni);
}

std::vector<SentencePair> synth_sts(std::size_t n_pairs, std::size_t vocab_size, std::uint64_t seed) {
  constexpr std::size_t kMinWords = 4, kMaxWords = 8;
  if (n_pairs < 2) throw InputError("synth_sts: need at least 2 pairs");
  if (vocab_size < 2 * kMaxWords) throw ConfigError("synth_sts: vocab_size must be at least 16");

  std::mt19937_64 rng(seed);
  auto uniform = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  std::vector<std::size_t> pool(vocab_size);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  auto join = [](const std::vector<std::size_t>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? " w" : "w") + std::to_string(ids[i]);
    return s;
  };

  std::vector<SentencePair> pairs;
  pairs.reserve(n_pairs);
  for (std::size_t n = 0; n < n_pairs; ++n) {
    // A partial shuffle gives distinct words: a takes the first len_a,
    // b reuses `shared` of them and draws the rest from the unused tail.
    for (std::size_t i = 0; i < 2 * kMaxWords; ++i) std::swap(pool[i], pool[uniform(i, vocab_size - 1)]);
    const std::size_t len_a = uniform(kMinWords, kMaxWords);
    const std::size_t shared = uniform(0, len_a);
    const std::size_t len_b = uniform(std::max(kMinWords, shared), kMaxWords);
    std::vector<std::size_t> a(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(len_a));
    std::vector<std::size_t> b(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(shared));
    for (std::size_t i = 0; b.size() < len_b; ++i) b.push_back(pool[kMaxWords + i]);
    std::shuffle(b.begin(), b.end(), rng);
    const double score = kMaxScore * static_cast<double>(shared) / static_cast<double>(len_a + len_b - shared);
    pairs.push_back(SentencePair::scored(join(a), join(b), score));
  }
  return pairs;
}

SENTEMB_NAMESPACE_END
