#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace clinitext::text {

// Ordered word tokens. Produced only by tokenize(); every element is a
// non-empty run of letters/digits with optional internal '-' or '\''.
class TokenSeq {
 public:
  TokenSeq() = default;
  explicit TokenSeq(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {}
  TokenSeq(std::initializer_list<std::string> tokens) : tokens_(tokens) {}

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }
  auto begin() const noexcept { return tokens_.begin(); }
  auto end() const noexcept { return tokens_.end(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  // Tokens joined by single spaces.
  std::string joined() const;

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;

 private:
  std::vector<std::string> tokens_;
};

struct Sentence {
  std::size_t index = 0;
  std::string text;  // trimmed substring of the (NFC-normalized) input
  TokenSeq tokens;   // lowercased
};

using NGram = std::vector<std::string>;

struct NGramCounts {
  std::size_t n = 1;
  std::map<NGram, std::size_t> counts;

  std::size_t total() const;
  std::size_t count(const NGram& gram) const;
};

std::string normalize_nfc(std::string_view text);

std::vector<Sentence> split_sentences(std::string_view text);

TokenSeq tokenize(std::string_view text, bool lowercase = true);

// Throws InvalidArgument when n == 0.
NGramCounts ngrams(const TokenSeq& seq, std::size_t n);

// Vowel-group heuristic, floor 1. Throws InvalidArgument on an empty word.
std::size_t count_syllables(std::string_view word);

// Small English function-word list shared by the summarizer and the
// overlap scorer.
bool is_stopword(std::string_view lowercase_token);

// Distinct lowercased tokens with stopwords removed.
std::set<std::string> content_tokens(std::string_view text);
std::set<std::string> content_tokens(const TokenSeq& seq);

// Prefix of `text` holding at most max_tokens tokens, cut right after the
// last kept token. Returns text unchanged when it already fits.
std::string truncate_to_tokens(std::string_view text, std::size_t max_tokens);

}  // namespace clinitext::text
