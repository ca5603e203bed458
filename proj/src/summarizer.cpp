#include "clinitext/summarizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "clinitext/errors.hpp"

namespace clinitext::summarizer {
namespace {

struct Ranked {
  std::vector<text::Sentence> sentences;
  std::vector<std::size_t> order;  // sentence indices by descending score, ties by position
};

Ranked rank_sentences(std::string_view text, const RankConfig& config) {
  Ranked r;
  r.sentences = text::split_sentences(text);
  if (r.sentences.empty()) return r;
  auto scores = rank(build_graph(r.sentences), config).scores;
  r.order.resize(r.sentences.size());
  std::iota(r.order.begin(), r.order.end(), 0);
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return r;
}

Summary assemble(const Ranked& r, std::size_t k) {
  Summary s;
  s.selected.assign(r.order.begin(), r.order.begin() + static_cast<std::ptrdiff_t>(std::min(k, r.order.size())));
  std::sort(s.selected.begin(), s.selected.end());
  for (std::size_t i = 0; i < s.selected.size(); ++i) {
    if (i) s.text.push_back(' ');
    s.text += r.sentences[s.selected[i]].text;
  }
  return s;
}

}  // namespace

SentenceGraph SentenceGraph::from_matrix(std::vector<std::vector<double>> weights) {
  SentenceGraph g;
  g.n_ = weights.size();
  g.w_.reserve(g.n_ * g.n_);
  for (std::size_t i = 0; i < g.n_; ++i) {
    if (weights[i].size() != g.n_) throw InvalidArgument("sentence graph: matrix is not square");
    for (std::size_t j = 0; j < g.n_; ++j) {
      double w = weights[i][j];
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("sentence graph: weights must be finite and >= 0");
      if (i == j && w != 0.0) throw InvalidArgument("sentence graph: diagonal must be zero");
      if (weights[j][i] != w) throw InvalidArgument("sentence graph: matrix is not symmetric");
      g.w_.push_back(w);
    }
  }
  return g;
}

void RankConfig::validate() const {
  if (!(damping > 0.0 && damping < 1.0)) throw InvalidArgument("damping must lie in (0,1)");
  if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (max_iterations == 0) throw InvalidArgument("max_iterations must be >= 1");
}

SentenceGraph build_graph(std::span<const text::Sentence> sentences) {
  if (sentences.empty()) throw InvalidArgument("build_graph: no sentences");
  const std::size_t n = sentences.size();
  std::vector<std::set<std::string>> sets;
  sets.reserve(n);
  for (const auto& s : sentences) sets.push_back(text::content_tokens(s.tokens));

  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // log(1) = 0 would blow up the normalizer.
      if (sets[i].size() < 2 || sets[j].size() < 2) continue;
      std::size_t shared = 0;
      for (const auto& t : sets[i]) shared += sets[j].count(t);
      if (shared == 0) continue;
      double denom = std::log(static_cast<double>(sets[i].size())) + std::log(static_cast<double>(sets[j].size()));
      w[i][j] = w[j][i] = static_cast<double>(shared) / denom;
    }
  }
  return SentenceGraph::from_matrix(std::move(w));
}

RankResult rank(const SentenceGraph& graph, const RankConfig& config) {
  config.validate();
  const std::size_t n = graph.size();
  std::vector<double> out_weight(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) out_weight[j] += graph.weight(j, k);
  }

  RankResult r;
  r.scores.assign(n, 1.0);
  std::vector<double> next(n);
  const double d = config.damping;
  while (r.iterations < config.max_iterations) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (out_weight[j] > 0.0 && graph.weight(j, i) > 0.0) acc += graph.weight(j, i) / out_weight[j] * r.scores[j];
      }
      next[i] = (1.0 - d) + d * acc;
    }
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change += std::abs(next[i] - r.scores[i]);
    r.scores.swap(next);
    ++r.iterations;
    if (change < config.tolerance) {
      r.converged = true;
      break;
    }
  }
  return r;
}

Summary extract_summary(std::string_view text, std::size_t k, const RankConfig& config) {
  if (k == 0) throw InvalidArgument("summary budget k must be >= 1");
  return assemble(rank_sentences(text, config), k);
}

std::size_t k_for_word_budget(std::string_view text, std::size_t word_budget, const RankConfig& config) {
  auto r = rank_sentences(text, config);
  std::size_t best = 1;
  for (std::size_t k = 1; k <= r.order.size(); ++k) {
    std::size_t words = 0;
    for (std::size_t i = 0; i < k; ++i) words += r.sentences[r.order[i]].tokens.size();
    if (words > word_budget) break;
    best = k;
  }
  return best;
}

}  // namespace clinitext::summarizer
