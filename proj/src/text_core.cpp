#include "clinitext/text_core.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <unordered_set>
#include <utility>

#include "clinitext/errors.hpp"

namespace clinitext::text {
namespace {

struct Span {
  std::size_t begin;
  std::size_t end;
};

struct Decoded {
  UChar32 cp;
  std::size_t next;
};

Decoded decode_at(std::string_view s, std::size_t i) {
  UChar32 c = 0;
  auto pos = static_cast<int32_t>(i);
  U8_NEXT(reinterpret_cast<const uint8_t*>(s.data()), pos, static_cast<int32_t>(s.size()), c);
  if (c < 0) c = 0xFFFD;
  return {c, static_cast<std::size_t>(pos)};
}

void append_utf8(std::string& out, UChar32 c) {
  std::array<uint8_t, 4> buf{};
  int32_t len = 0;
  UBool error = false;
  U8_APPEND(buf.data(), len, 4, c, error);
  if (error) return;
  out.append(reinterpret_cast<const char*>(buf.data()), static_cast<std::size_t>(len));
}

bool is_ascii(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

bool is_word_char(UChar32 c) { return u_isalnum(c); }

bool is_mark(UChar32 c) { return (U_GET_GC_MASK(c) & U_GC_M_MASK) != 0; }

bool is_space(UChar32 c) { return u_isUWhiteSpace(c); }

std::vector<Span> token_spans(std::string_view s) {
  std::vector<Span> spans;
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    auto [c, next] = decode_at(s, i);
    if (!is_word_char(c)) {
      i = next;
      continue;
    }
    const std::size_t start = i;
    std::size_t end = next;
    i = next;
    while (i < n) {
      auto [c2, next2] = decode_at(s, i);
      if (is_word_char(c2) || is_mark(c2)) {
        end = next2;
        i = next2;
        continue;
      }
      if ((c2 == '-' || c2 == '\'') && next2 < n) {
        auto [c3, next3] = decode_at(s, next2);
        if (is_word_char(c3)) {
          end = next3;
          i = next3;
          continue;
        }
      }
      break;
    }
    spans.push_back({start, end});
  }
  return spans;
}

std::string lower(std::string_view token) {
  std::string out;
  out.reserve(token.size());
  std::size_t i = 0;
  while (i < token.size()) {
    auto [c, next] = decode_at(token, i);
    if (c < 0x80) {
      out.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c + ('a' - 'A') : c));
    } else {
      append_utf8(out, u_tolower(c));
    }
    i = next;
  }
  return out;
}

TokenSeq tokens_of_normalized(std::string_view s, bool lowercase) {
  std::vector<std::string> out;
  for (const auto& span : token_spans(s)) {
    auto tok = s.substr(span.begin, span.end - span.begin);
    out.push_back(lowercase ? lower(tok) : std::string(tok));
  }
  return TokenSeq(std::move(out));
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

const std::unordered_set<std::string>& abbreviations() {
  static const std::unordered_set<std::string> kAbbrev = {
      "dr.", "mr.", "mrs.", "ms.", "prof.", "sr.", "jr.", "st.", "vs.",
      "e.g.", "i.e.", "a.m.", "p.m.", "approx.", "fig.", "pt.", "etc."};
  return kAbbrev;
}

// True when the word ending at the '.' at `dot` is on the abbreviation list.
bool ends_in_abbreviation(std::string_view s, std::size_t seg_start, std::size_t dot) {
  std::size_t b = dot;
  while (b > seg_start) {
    auto ch = static_cast<unsigned char>(s[b - 1]);
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '(' || ch == '"') break;
    --b;
  }
  std::string word;
  for (std::size_t k = b; k <= dot; ++k) {
    char ch = s[k];
    word.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch + ('a' - 'A')) : ch);
  }
  return abbreviations().count(word) > 0;
}

std::size_t skip_space(std::string_view s, std::size_t i) {
  while (i < s.size()) {
    auto [c, next] = decode_at(s, i);
    if (!is_space(c)) break;
    i = next;
  }
  return i;
}

std::size_t trim_end(std::string_view s, std::size_t begin, std::size_t end) {
  while (end > begin) {
    // Walk back to the start of the last code point.
    std::size_t k = end - 1;
    while (k > begin && (static_cast<unsigned char>(s[k]) & 0xC0) == 0x80) --k;
    if (!is_space(decode_at(s, k).cp)) break;
    end = k;
  }
  return end;
}

bool starts_sentence(std::string_view s, std::size_t p) {
  if (p < s.size() && (s[p] == '"' || s[p] == '(')) ++p;
  if (p >= s.size()) return false;
  UChar32 c = decode_at(s, p).cp;
  return u_isupper(c) || u_istitle(c) || u_isdigit(c);
}

std::vector<Span> sentence_spans(std::string_view s) {
  std::vector<Span> segs;
  const std::size_t n = s.size();
  std::size_t seg_start = skip_space(s, 0);
  std::size_t i = seg_start;
  while (i < n) {
    if (!is_terminator(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && is_terminator(s[j])) ++j;
    std::size_t k = j;
    while (k < n && is_closer(s[k])) ++k;

    bool boundary = false;
    if (k == n) {
      boundary = true;
    } else if (is_space(decode_at(s, k).cp)) {
      std::size_t m = skip_space(s, k);
      boundary = m == n || starts_sentence(s, m);
    }
    if (boundary && j - i == 1 && s[i] == '.' && ends_in_abbreviation(s, seg_start, i)) {
      boundary = false;
    }
    if (boundary) {
      segs.push_back({seg_start, k});
      seg_start = skip_space(s, k);
      i = seg_start;
    } else {
      i = k;
    }
  }
  if (seg_start < n) {
    std::size_t end = trim_end(s, seg_start, n);
    if (end > seg_start) segs.push_back({seg_start, end});
  }
  return segs;
}

}  // namespace

std::string TokenSeq::joined() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens_[i];
  }
  return out;
}

std::size_t NGramCounts::total() const {
  std::size_t t = 0;
  for (const auto& [gram, c] : counts) t += c;
  return t;
}

std::size_t NGramCounts::count(const NGram& gram) const {
  auto it = counts.find(gram);
  return it == counts.end() ? 0 : it->second;
}

std::string normalize_nfc(std::string_view text) {
  if (is_ascii(text)) return std::string(text);
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString dst = nfc->normalize(src, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  std::string out;
  dst.toUTF8String(out);
  return out;
}

std::vector<Sentence> split_sentences(std::string_view text) {
  const std::string s = normalize_nfc(text);
  std::vector<Sentence> out;
  std::size_t carry = std::string::npos;  // start of a leading token-less run
  std::size_t out_begin = 0;
  std::vector<std::size_t> begins;

  for (const auto& seg : sentence_spans(s)) {
    std::size_t begin = carry == std::string::npos ? seg.begin : carry;
    auto tokens = tokens_of_normalized(std::string_view(s).substr(begin, seg.end - begin), true);
    if (tokens.empty()) {
      if (!out.empty()) {
        out.back().text = s.substr(out_begin, seg.end - out_begin);
      } else {
        carry = begin;
      }
      continue;
    }
    carry = std::string::npos;
    out_begin = begin;
    out.push_back({out.size(), s.substr(begin, seg.end - begin), std::move(tokens)});
  }
  if (out.empty() && carry != std::string::npos) {
    std::size_t end = trim_end(s, carry, s.size());
    out.push_back({0, s.substr(carry, end - carry), TokenSeq{}});
  }
  return out;
}

TokenSeq tokenize(std::string_view text, bool lowercase) {
  return tokens_of_normalized(normalize_nfc(text), lowercase);
}

NGramCounts ngrams(const TokenSeq& seq, std::size_t n) {
  if (n == 0) throw InvalidArgument("n-gram order must be >= 1");
  NGramCounts out;
  out.n = n;
  if (seq.size() < n) return out;
  const auto& toks = seq.tokens();
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++out.counts[NGram(toks.begin() + static_cast<std::ptrdiff_t>(i),
                       toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

std::size_t count_syllables(std::string_view word) {
  if (word.empty()) throw InvalidArgument("count_syllables: empty token");
  std::string w;
  w.reserve(word.size());
  for (char c : word) w.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c + ('a' - 'A')) : c);

  auto vowel = [](char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
  };
  auto consonant = [&](char c) { return c >= 'a' && c <= 'z' && !vowel(c); };

  std::size_t groups = 0;
  bool in_group = false;
  for (char c : w) {
    bool v = vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }

  const std::size_t n = w.size();
  if (n >= 2 && w[n - 1] == 'e' && consonant(w[n - 2])) {
    bool consonant_le = w[n - 2] == 'l' && n >= 3 && consonant(w[n - 3]);
    if (!consonant_le && groups > 0) --groups;
  }
  return std::max<std::size_t>(groups, 1);
}

bool is_stopword(std::string_view t) {
  static const std::unordered_set<std::string_view> kStop = {
      "a", "an", "the", "and", "or", "but", "nor", "so", "yet", "if", "then", "than",
      "as", "at", "by", "for", "from", "in", "into", "of", "on", "onto", "to", "with",
      "without", "within", "about", "above", "after", "again", "against", "before",
      "below", "between", "during", "over", "under", "through", "up", "down", "out",
      "off", "i", "me", "my", "we", "us", "our", "you", "your", "he", "him", "his",
      "she", "her", "it", "its", "they", "them", "their", "this", "that", "these",
      "those", "who", "whom", "whose", "which", "what", "when", "where", "why", "how",
      "am", "is", "are", "was", "were", "be", "been", "being", "have", "has", "had",
      "having", "do", "does", "did", "doing", "will", "would", "shall", "should",
      "can", "could", "may", "might", "must", "not", "no", "all", "any", "both",
      "each", "few", "more", "most", "other", "some", "such", "only", "own", "same",
      "too", "very", "there", "here", "also", "just", "s", "t"};
  return kStop.count(t) > 0;
}

std::set<std::string> content_tokens(const TokenSeq& seq) {
  std::set<std::string> out;
  for (const auto& t : seq) {
    if (!is_stopword(t)) out.insert(t);
  }
  return out;
}

std::set<std::string> content_tokens(std::string_view text) {
  return content_tokens(tokenize(text, true));
}

std::string truncate_to_tokens(std::string_view text, std::size_t max_tokens) {
  const std::string s = normalize_nfc(text);
  auto spans = token_spans(s);
  if (spans.size() <= max_tokens) return std::string(text);
  if (max_tokens == 0) return {};
  return s.substr(0, spans[max_tokens - 1].end);
}

}  // namespace clinitext::text
