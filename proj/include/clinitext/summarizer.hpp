#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clinitext/text_core.hpp"

namespace clinitext::summarizer {

// Symmetric, non-negative sentence similarity matrix with a zero diagonal.
class SentenceGraph {
 public:
  SentenceGraph() = default;

  // Validates symmetry, zero diagonal and non-negativity; throws InvalidArgument.
  static SentenceGraph from_matrix(std::vector<std::vector<double>> weights);

  std::size_t size() const noexcept { return n_; }
  double weight(std::size_t i, std::size_t j) const { return w_[i * n_ + j]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> w_;  // row-major n x n
};

struct RankConfig {
  double damping = 0.85;
  double tolerance = 1e-4;  // L1 change between iterations
  std::size_t max_iterations = 100;

  void validate() const;
};

struct RankResult {
  std::vector<double> scores;
  std::size_t iterations = 0;
  bool converged = false;
};

// Overlap of distinct content tokens normalized by log set sizes.
// Throws InvalidArgument for an empty sentence list.
SentenceGraph build_graph(std::span<const text::Sentence> sentences);

// Weighted PageRank iteration from uniform 1.0 (synchronous updates).
RankResult rank(const SentenceGraph& graph, const RankConfig& config = {});

struct Summary {
  std::string text;                   // selected sentences joined by one space
  std::vector<std::size_t> selected;  // original indices, strictly increasing
};

// Top-k sentences by score, emitted in document order; ties go to the
// earlier sentence. Throws InvalidArgument when k == 0.
Summary extract_summary(std::string_view text, std::size_t k, const RankConfig& config = {});

// Largest k (at least 1) whose top-k summary holds at most word_budget words.
std::size_t k_for_word_budget(std::string_view text, std::size_t word_budget, const RankConfig& config = {});

}  // namespace clinitext::summarizer
