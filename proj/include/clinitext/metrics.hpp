#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clinitext/text_core.hpp"

namespace clinitext::metrics {

using text::TokenSeq;

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when both candidate and reference are empty; all scores are 0.
  bool degenerate = false;
};

// Clipped n-gram overlap ROUGE. With several references the triple of the
// best-F1 reference is returned (first one on ties).
RougeScore rouge_n(const TokenSeq& candidate, std::span<const TokenSeq> references, std::size_t n);

// Whole-sequence LCS ROUGE-L, same multi-reference rule as rouge_n.
RougeScore rouge_l(const TokenSeq& candidate, std::span<const TokenSeq> references);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

// Pooled counts behind a corpus BLEU score; additive across sentence pairs.
struct BleuStats {
  std::vector<std::size_t> matches;  // clipped matches per order 1..N
  std::vector<std::size_t> totals;   // candidate n-grams per order 1..N
  std::size_t candidate_len = 0;
  std::size_t reference_len = 0;

  explicit BleuStats(std::size_t max_order = 4) : matches(max_order, 0), totals(max_order, 0) {}
  BleuStats& operator+=(const BleuStats& other);
};

struct BleuScore {
  double bleu = 0.0;
  double brevity_penalty = 1.0;
  std::vector<double> precisions;  // values entering the geometric mean (after smoothing)
  std::size_t candidate_len = 0;
  std::size_t reference_len = 0;
};

inline constexpr double kBleuSmoothingEpsilon = 1e-9;

BleuStats sentence_bleu_stats(const TokenSeq& candidate, const TokenSeq& reference, std::size_t max_order = 4);
BleuScore bleu_from_stats(const BleuStats& stats);

// Throws InvalidArgument on empty or length-mismatched lists.
BleuScore corpus_bleu(std::span<const TokenSeq> candidates, std::span<const TokenSeq> references,
                      std::size_t max_order = 4);

struct ReadabilityScore {
  double fkgl = 0.0;
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t syllables = 0;
};

// 0.39*(w/s) + 11.8*(y/w) - 15.59, evaluated as a single rational division
// so that the result is the double nearest the exact value.
double fkgl_from_counts(std::size_t words, std::size_t sentences, std::size_t syllables);

// Throws InvalidArgument when the text has no words.
ReadabilityScore fkgl(std::string_view text);

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> gold);

enum class Criterion { readability = 0, relevancy = 1, accuracy = 2, completeness = 3 };
inline constexpr std::array<Criterion, 4> kCriteria = {Criterion::readability, Criterion::relevancy,
                                                       Criterion::accuracy, Criterion::completeness};
std::string_view criterion_name(Criterion c);

// One rater's four 1..5 Likert scores.
struct LikertRating {
  std::array<int, 4> scores{};
  int operator[](Criterion c) const { return scores[static_cast<std::size_t>(c)]; }
  int& operator[](Criterion c) { return scores[static_cast<std::size_t>(c)]; }
};

using CriterionValues = std::array<double, 4>;

// Throws InvalidArgument (naming the criterion) for scores outside 1..5 or
// an empty list.
CriterionValues likert_summary(std::span<const LikertRating> ratings);

inline constexpr int kDefaultBinarizationThreshold = 3;

// Fraction of items whose binarized (score >= threshold) ratings coincide.
double percentage_agreement(std::span<const int> rater_a, std::span<const int> rater_b,
                            int threshold = kDefaultBinarizationThreshold);

struct AgreementReport {
  CriterionValues agreement{};
  std::size_t n_items = 0;
  int binarization_threshold = kDefaultBinarizationThreshold;
};

AgreementReport agreement_report(std::span<const LikertRating> rater_a, std::span<const LikertRating> rater_b,
                                 int threshold = kDefaultBinarizationThreshold);

}  // namespace clinitext::metrics
