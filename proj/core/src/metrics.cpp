#include "slangdef/metrics.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace slangdef {

namespace {

template <typename T>
std::map<std::vector<T>, std::size_t> ngram_counts(const std::vector<T>& tokens, std::size_t n) {
  std::map<std::vector<T>, std::size_t> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<T>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                            tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

/// Clipped matches and candidate n-gram total for one sentence.
template <typename T>
std::pair<std::size_t, std::size_t> clipped(const std::vector<T>& cand, const std::vector<T>& ref,
                                            std::size_t n) {
  const auto c = ngram_counts(cand, n);
  const auto r = ngram_counts(ref, n);
  std::size_t matches = 0;
  std::size_t total = 0;
  for (const auto& [gram, count] : c) {
    total += count;
    const auto it = r.find(gram);
    if (it != r.end()) matches += std::min(count, it->second);
  }
  return {matches, total};
}

template <typename T>
BleuReport corpus_bleu(std::span<const std::vector<T>> candidates,
                       std::span<const std::vector<T>> references) {
  if (candidates.empty()) throw std::invalid_argument("bleu: empty corpus");
  if (candidates.size() != references.size()) {
    throw std::invalid_argument("bleu: " + std::to_string(candidates.size()) + " candidates but " +
                                std::to_string(references.size()) + " references");
  }
  BleuReport rep;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    rep.candidate_tokens += candidates[i].size();
    rep.reference_tokens += references[i].size();
    const auto [m1, t1] = clipped(candidates[i], references[i], 1);
    const auto [m2, t2] = clipped(candidates[i], references[i], 2);
    rep.matches1 += m1;
    rep.total1 += t1;
    rep.matches2 += m2;
    rep.total2 += t2;
  }
  rep.p1 = rep.total1 ? static_cast<double>(rep.matches1) / static_cast<double>(rep.total1) : 0.0;
  rep.p2 = rep.total2 ? static_cast<double>(rep.matches2) / static_cast<double>(rep.total2) : 0.0;

  const auto c = static_cast<double>(rep.candidate_tokens);
  const auto r = static_cast<double>(rep.reference_tokens);
  if (rep.candidate_tokens == 0) {
    rep.brevity_penalty = rep.reference_tokens == 0 ? 1.0 : 0.0;
  } else {
    rep.brevity_penalty = c >= r ? 1.0 : std::exp(1.0 - r / c);
  }
  rep.b1 = 100.0 * rep.brevity_penalty * rep.p1;
  rep.b2 = 100.0 * rep.brevity_penalty * std::sqrt(rep.p1 * rep.p2);
  return rep;
}

}  // namespace

BleuReport bleu(std::span<const std::vector<std::string>> candidates,
                std::span<const std::vector<std::string>> references) {
  return corpus_bleu(candidates, references);
}

BleuReport bleu(std::span<const std::vector<TokenId>> candidates,
                std::span<const std::vector<TokenId>> references) {
  return corpus_bleu(candidates, references);
}

std::string to_json(const BleuReport& report) {
  nlohmann::ordered_json j;
  j["b1"] = report.b1;
  j["b2"] = report.b2;
  j["brevity_penalty"] = report.brevity_penalty;
  j["p1"] = report.p1;
  j["p2"] = report.p2;
  j["candidate_tokens"] = report.candidate_tokens;
  j["reference_tokens"] = report.reference_tokens;
  j["matches1"] = report.matches1;
  j["total1"] = report.total1;
  j["matches2"] = report.matches2;
  j["total2"] = report.total2;
  return j.dump(2);
}

}  // namespace slangdef
