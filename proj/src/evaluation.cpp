// SPDX-License-Identifier: Apache-2.0
#include "sentemb/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "sentemb/errors.hpp"
#include "sentemb/format.hpp"

SENTEMB_NAMESPACE_BEGIN

std::vector<double> rank(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 hold ranks i+1..j; their mean is (i + 1 + j) / 2.
    const double r = static_cast<double>(i + 1 + j) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw InputError("correlation: length mismatch (" + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  const std::size_t n = x.size();
  if (n < 2) throw InputError("correlation: need at least two values");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw UndefinedCorrelationError("correlation undefined for a constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) return pearson(x, y);  // reports the mismatch
  const auto rx = rank(x), ry = rank(y);
  return pearson(rx, ry);
}

std::string render_percent(double rho) {
  if (!std::isfinite(rho)) throw InputError("cannot render a non-finite correlation");
  // nearbyint follows the default rounding mode: ties to even.
  const auto hundredths = static_cast<long long>(std::nearbyint(rho * 1e4));
  const long long mag = hundredths < 0 ? -hundredths : hundredths;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", hundredths < 0 ? "-" : "", mag / 100, mag % 100);
  return buf;
}

std::string EvalReport::rendered() const { return render_percent(spearman) + " (" + render_percent(pearson) + ")"; }

std::pair<double, double> parse_rendered(const std::string& text) {
  double s = 0, p = 0;
  int consumed = 0;
  if (std::sscanf(text.c_str(), "%lf (%lf)%n", &s, &p, &consumed) != 2 ||
      static_cast<std::size_t>(consumed) != text.size())
    throw FormatError("not a rendered report: '" + text + "'");
  return {s / 100.0, p / 100.0};
}

std::string EvalReport::serialize() const {
  std::string out;
  out += "spearman=" + format_shortest(spearman) + "\n";
  out += "pearson=" + format_shortest(pearson) + "\n";
  out += "n_pairs=" + std::to_string(n_pairs) + "\n";
  out += "rendered=" + rendered() + "\n";
  return out;
}

void EvalReport::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write report " + path.string());
  out << serialize();
}

EvalReport evaluate_predictions(std::span<const double> predicted, std::span<const double> gold) {
  EvalReport r;
  r.spearman = spearman(predicted, gold);
  r.pearson = pearson(predicted, gold);
  r.n_pairs = predicted.size();
  return r;
}

std::vector<double> predict_similarity(const SiameseModel& model, const Vocab& vocab,
                                       const TokenizerOptions& options, std::span<const SentencePair> pairs,
                                       std::size_t batch_size) {
  batch_size = std::max<std::size_t>(batch_size, 1);
  const std::size_t h = model.hidden_dim();
  std::vector<double> out;
  out.reserve(pairs.size());
  for (std::size_t start = 0; start < pairs.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, pairs.size() - start);
    std::vector<std::vector<std::int32_t>> left, right;
    for (std::size_t i = start; i < start + count; ++i) {
      left.push_back(encode_sentence(vocab, pairs[i].sentence_a, options));
      right.push_back(encode_sentence(vocab, pairs[i].sentence_b, options));
    }
    const Tensor u = model.embed(TokenizedBatch::from_sequences(left));
    const Tensor v = model.embed(TokenizedBatch::from_sequences(right));
    const auto ud = u.data(), vd = v.data();
    for (std::size_t b = 0; b < count; ++b)
      out.push_back(cosine_similarity(ud.subspan(b * h, h), vd.subspan(b * h, h)));
  }
  return out;
}

EvalReport evaluate_sts(const SiameseModel& model, const Vocab& vocab, const TokenizerOptions& options,
                        std::span<const SentencePair> pairs) {
  if (pairs.size() < 2) throw InputError("evaluation needs at least two pairs");
  std::vector<double> gold;
  gold.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (!p.score) throw InputError("evaluation needs scored pairs");
    gold.push_back(*p.score);
  }
  const auto predicted = predict_similarity(model, vocab, options, pairs);
  return evaluate_predictions(predicted, gold);
}

SENTEMB_NAMESPACE_END
