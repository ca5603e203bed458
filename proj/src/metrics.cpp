#include "clinitext/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "clinitext/errors.hpp"

namespace clinitext::metrics {
namespace {

RougeScore make_score(double overlap, double cand_total, double ref_total) {
  RougeScore s;
  s.precision = cand_total > 0 ? overlap / cand_total : 0.0;
  s.recall = ref_total > 0 ? overlap / ref_total : 0.0;
  double sum = s.precision + s.recall;
  s.f1 = sum > 0 ? 2.0 * s.precision * s.recall / sum : 0.0;
  return s;
}

template <typename PerReference>
RougeScore best_of(const TokenSeq& candidate, std::span<const TokenSeq> references, PerReference score_one) {
  if (references.empty()) throw InvalidArgument("ROUGE requires at least one reference");
  RougeScore best;
  bool first = true;
  for (const auto& ref : references) {
    RougeScore s;
    if (candidate.empty() && ref.empty()) {
      s.degenerate = true;
    } else {
      s = score_one(ref);
    }
    if (first || s.f1 > best.f1) {
      best = s;
      first = false;
    }
  }
  return best;
}

}  // namespace

RougeScore rouge_n(const TokenSeq& candidate, std::span<const TokenSeq> references, std::size_t n) {
  if (n == 0) throw InvalidArgument("ROUGE-N order must be >= 1");
  const auto cand = text::ngrams(candidate, n);
  const double cand_total = static_cast<double>(cand.total());
  return best_of(candidate, references, [&](const TokenSeq& ref) {
    const auto refg = text::ngrams(ref, n);
    std::size_t overlap = 0;
    for (const auto& [gram, c] : cand.counts) overlap += std::min(c, refg.count(gram));
    return make_score(static_cast<double>(overlap), cand_total, static_cast<double>(refg.total()));
  });
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = 0;  // row[i-1][j-1]
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t up = row[j];
      row[j] = a[i - 1] == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

RougeScore rouge_l(const TokenSeq& candidate, std::span<const TokenSeq> references) {
  return best_of(candidate, references, [&](const TokenSeq& ref) {
    auto lcs = lcs_length(candidate.tokens(), ref.tokens());
    return make_score(static_cast<double>(lcs), static_cast<double>(candidate.size()),
                      static_cast<double>(ref.size()));
  });
}

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  if (other.matches.size() != matches.size()) throw InvalidArgument("BLEU stats of different max order");
  for (std::size_t i = 0; i < matches.size(); ++i) {
    matches[i] += other.matches[i];
    totals[i] += other.totals[i];
  }
  candidate_len += other.candidate_len;
  reference_len += other.reference_len;
  return *this;
}

BleuStats sentence_bleu_stats(const TokenSeq& candidate, const TokenSeq& reference, std::size_t max_order) {
  if (max_order == 0) throw InvalidArgument("BLEU max order must be >= 1");
  BleuStats st(max_order);
  st.candidate_len = candidate.size();
  st.reference_len = reference.size();
  for (std::size_t n = 1; n <= max_order; ++n) {
    const auto cand = text::ngrams(candidate, n);
    const auto ref = text::ngrams(reference, n);
    std::size_t m = 0;
    for (const auto& [gram, c] : cand.counts) m += std::min(c, ref.count(gram));
    st.matches[n - 1] = m;
    st.totals[n - 1] = cand.total();
  }
  return st;
}

BleuScore bleu_from_stats(const BleuStats& st) {
  BleuScore out;
  out.candidate_len = st.candidate_len;
  out.reference_len = st.reference_len;
  const std::size_t orders = st.matches.size();

  const double c = static_cast<double>(st.candidate_len);
  const double r = static_cast<double>(st.reference_len);
  if (st.candidate_len == 0) {
    out.brevity_penalty = st.reference_len == 0 ? 1.0 : 0.0;
  } else {
    out.brevity_penalty = c <= r ? std::exp(1.0 - r / c) : 1.0;
  }

  if (orders == 0 || st.matches[0] == 0) {
    out.precisions.assign(orders, 0.0);
    for (std::size_t i = 0; i < orders; ++i) {
      if (st.totals[i] > 0) out.precisions[i] = static_cast<double>(st.matches[i]) / static_cast<double>(st.totals[i]);
    }
    out.bleu = 0.0;
    return out;
  }

  double log_sum = 0.0;
  for (std::size_t i = 0; i < orders; ++i) {
    double num = static_cast<double>(st.matches[i]);
    double den = static_cast<double>(st.totals[i]);
    if (num == 0.0) num = kBleuSmoothingEpsilon;
    if (den == 0.0) den = 1.0;
    double p = num / den;
    out.precisions.push_back(p);
    log_sum += std::log(p);
  }
  out.bleu = out.brevity_penalty * std::exp(log_sum / static_cast<double>(orders));
  return out;
}

BleuScore corpus_bleu(std::span<const TokenSeq> candidates, std::span<const TokenSeq> references,
                      std::size_t max_order) {
  if (candidates.size() != references.size()) {
    throw InvalidArgument("corpus_bleu: " + std::to_string(candidates.size()) + " candidates vs " +
                          std::to_string(references.size()) + " references");
  }
  if (candidates.empty()) throw InvalidArgument("corpus_bleu: empty corpus");
  BleuStats total(max_order);
  for (std::size_t i = 0; i < candidates.size(); ++i) total += sentence_bleu_stats(candidates[i], references[i], max_order);
  return bleu_from_stats(total);
}

double fkgl_from_counts(std::size_t words, std::size_t sentences, std::size_t syllables) {
  if (words == 0 || sentences == 0) throw InvalidArgument("FKGL requires at least one word and one sentence");
  const auto w = static_cast<std::int64_t>(words);
  const auto s = static_cast<std::int64_t>(sentences);
  const auto y = static_cast<std::int64_t>(syllables);
  // 0.39 w/s + 11.8 y/w - 15.59 == (39 w^2 + 1180 y s - 1559 w s) / (100 w s)
  const std::int64_t num = 39 * w * w + 1180 * y * s - 1559 * w * s;
  const std::int64_t den = 100 * w * s;
  return static_cast<double>(num) / static_cast<double>(den);
}

ReadabilityScore fkgl(std::string_view text) {
  const auto tokens = text::tokenize(text, true);
  if (tokens.empty()) throw InvalidArgument("FKGL: text contains no words");
  ReadabilityScore out;
  out.words = tokens.size();
  out.sentences = text::split_sentences(text).size();
  for (const auto& t : tokens) out.syllables += text::count_syllables(t);
  out.fkgl = fkgl_from_counts(out.words, out.sentences, out.syllables);
  return out;
}

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> gold) {
  if (predictions.size() != gold.size()) throw InvalidArgument("accuracy: prediction/gold length mismatch");
  if (gold.empty()) throw InvalidArgument("accuracy: empty input");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hit += predictions[i] == gold[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(gold.size());
}

std::string_view criterion_name(Criterion c) {
  switch (c) {
    case Criterion::readability: return "readability";
    case Criterion::relevancy: return "relevancy";
    case Criterion::accuracy: return "accuracy";
    case Criterion::completeness: return "completeness";
  }
  return "unknown";
}

CriterionValues likert_summary(std::span<const LikertRating> ratings) {
  if (ratings.empty()) throw InvalidArgument("likert_summary: no ratings");
  std::array<std::int64_t, 4> sums{};
  for (const auto& r : ratings) {
    for (auto c : kCriteria) {
      int v = r[c];
      if (v < 1 || v > 5) {
        throw InvalidArgument(std::string(criterion_name(c)) + " score " + std::to_string(v) + " outside 1..5");
      }
      sums[static_cast<std::size_t>(c)] += v;
    }
  }
  CriterionValues means{};
  for (std::size_t i = 0; i < 4; ++i) means[i] = static_cast<double>(sums[i]) / static_cast<double>(ratings.size());
  return means;
}

double percentage_agreement(std::span<const int> rater_a, std::span<const int> rater_b, int threshold) {
  if (rater_a.size() != rater_b.size()) throw InvalidArgument("percentage_agreement: rater length mismatch");
  if (rater_a.empty()) throw InvalidArgument("percentage_agreement: no items");
  std::size_t same = 0;
  for (std::size_t i = 0; i < rater_a.size(); ++i) {
    for (int v : {rater_a[i], rater_b[i]}) {
      if (v < 1 || v > 5) throw InvalidArgument("percentage_agreement: score " + std::to_string(v) + " outside 1..5");
    }
    same += (rater_a[i] >= threshold) == (rater_b[i] >= threshold) ? 1 : 0;
  }
  return static_cast<double>(same) / static_cast<double>(rater_a.size());
}

AgreementReport agreement_report(std::span<const LikertRating> rater_a, std::span<const LikertRating> rater_b,
                                 int threshold) {
  if (rater_a.size() != rater_b.size()) throw InvalidArgument("agreement_report: rater length mismatch");
  AgreementReport out;
  out.n_items = rater_a.size();
  out.binarization_threshold = threshold;
  for (auto c : kCriteria) {
    std::vector<int> a, b;
    for (const auto& r : rater_a) a.push_back(r[c]);
    for (const auto& r : rater_b) b.push_back(r[c]);
    out.agreement[static_cast<std::size_t>(c)] = percentage_agreement(a, b, threshold);
  }
  return out;
}

}  // namespace clinitext::metrics
