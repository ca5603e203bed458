#include <gtest/gtest.h>

#include <random>

#include "clinitext/errors.hpp"
#include "clinitext/text_core.hpp"
#include "oracles/oracles.hpp"

using namespace clinitext;
using namespace clinitext::text;

namespace {

std::vector<std::string> texts(const std::vector<Sentence>& ss) {
  std::vector<std::string> out;
  for (const auto& s : ss) out.push_back(s.text);
  return out;
}

std::string strip_space(std::string_view s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  return out;
}

}  // namespace

TEST(SplitSentences, EmptyAndWhitespace) {
  EXPECT_TRUE(split_sentences("").empty());
  EXPECT_TRUE(split_sentences("  \n\t ").empty());
}

TEST(SplitSentences, TwoSimpleSentences) {
  auto ss = split_sentences("I see a dog. It runs fast.");
  ASSERT_EQ(ss.size(), 2u);
  EXPECT_EQ(ss[0].text, "I see a dog.");
  EXPECT_EQ(ss[1].text, "It runs fast.");
  EXPECT_EQ(ss[0].index, 0u);
  EXPECT_EQ(ss[1].index, 1u);
  EXPECT_EQ(ss[1].tokens, (TokenSeq{"it", "runs", "fast"}));
}

TEST(SplitSentences, DecimalIsNotABoundary) {
  auto ss = split_sentences("He weighed 3.5 kg. Then he slept.");
  EXPECT_EQ(texts(ss), (std::vector<std::string>{"He weighed 3.5 kg.", "Then he slept."}));
}

TEST(SplitSentences, AbbreviationsAndLowercaseContinuation) {
  EXPECT_EQ(split_sentences("Seen by Dr. Smith today. Stable.").size(), 2u);
  EXPECT_EQ(split_sentences("Give fluids, e.g. Saline. Recheck.").size(), 2u);
  EXPECT_EQ(split_sentences("Seen at 3 p.m. Discharged home.").size(), 1u);
  // Lowercase after the period is not a boundary.
  EXPECT_EQ(split_sentences("pt stable. no distress.").size(), 1u);
}

TEST(SplitSentences, TerminatorRunsClosersAndDigits) {
  auto ss = split_sentences("Really?! \"Yes.\" 2 tablets daily.");
  EXPECT_EQ(texts(ss), (std::vector<std::string>{"Really?!", "\"Yes.\"", "2 tablets daily."}));
}

TEST(SplitSentences, PunctuationOnlySegmentsMergeIntoNeighbour) {
  auto ss = split_sentences("Pain resolved. ... Discharged.");
  ASSERT_EQ(ss.size(), 2u);
  EXPECT_EQ(ss[0].text, "Pain resolved. ...");
  for (const auto& s : ss) EXPECT_FALSE(s.tokens.empty());
}

TEST(SplitSentences, NoTerminalPunctuationAndMultiline) {
  auto ss = split_sentences("Chief complaint: chest pain\n\nHPI: 54M with CP");
  ASSERT_EQ(ss.size(), 1u);
  EXPECT_EQ(ss[0].text, "Chief complaint: chest pain\n\nHPI: 54M with CP");
}

TEST(SplitSentences, CoverPropertyOnRandomText) {
  std::mt19937_64 rng(11);
  const char* pieces[] = {"Pain", "resolved", "3.5", "kg", "Dr.", "e.g.", "!", "?", ".", "The", "[**2144-4-21**]",
                          "post-op", "\n", "  ", "It's", "(", ")", "\""};
  std::uniform_int_distribution<std::size_t> pick(0, std::size(pieces) - 1);
  for (int round = 0; round < 300; ++round) {
    std::string text;
    for (int i = 0; i < 25; ++i) {
      text += pieces[pick(rng)];
      text += ' ';
    }
    auto ss = split_sentences(text);
    std::string joined;
    for (const auto& s : ss) joined += s.text;
    EXPECT_EQ(strip_space(joined), strip_space(text)) << text;
    for (std::size_t i = 0; i < ss.size(); ++i) EXPECT_EQ(ss[i].index, i);
  }
}

TEST(SplitSentences, CountAdditivity) {
  std::mt19937_64 rng(5);
  auto sentence = [&](std::size_t words) {
    auto toks = oracles::random_tokens(rng, words, words, 12);
    std::string s = "Patient";
    for (auto& t : toks) s += " " + t;
    return s + ".";
  };
  std::uniform_int_distribution<std::size_t> n(1, 4), w(1, 6);
  for (int round = 0; round < 200; ++round) {
    std::string a, b;
    for (std::size_t i = 0, k = n(rng); i < k; ++i) a += (i ? " " : "") + sentence(w(rng));
    for (std::size_t i = 0, k = n(rng); i < k; ++i) b += (i ? " " : "") + sentence(w(rng));
    EXPECT_EQ(split_sentences(a + " " + b).size(), split_sentences(a).size() + split_sentences(b).size());
  }
}

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("The cat sat."), (TokenSeq{"the", "cat", "sat"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("CABG complicated by post-op bleed"), (TokenSeq{"cabg", "complicated", "by", "post-op", "bleed"}));
}

TEST(Tokenize, GrammarEdges) {
  EXPECT_EQ(tokenize("Don't stop -- 'quoted' a--b x-"), (TokenSeq{"don't", "stop", "quoted", "a", "b", "x"}));
  EXPECT_EQ(tokenize("Admitted [**2144-4-21**] to ICU", false),
            (TokenSeq{"Admitted", "2144-4-21", "to", "ICU"}));
  EXPECT_EQ(tokenize("BP 120/80, HR 3.5"), (TokenSeq{"bp", "120", "80", "hr", "3", "5"}));
}

TEST(Tokenize, UnicodeIsNfcNormalizedAndLowercased) {
  // "Café" with a combining acute accent vs the precomposed form.
  std::string decomposed = "Cafe\xCC\x81 Na\xC3\xAFve";
  std::string composed = "caf\xC3\xA9";
  auto toks = tokenize(decomposed);
  ASSERT_EQ(toks.size(), 2u);
  EXPECT_EQ(toks[0], composed);
  EXPECT_EQ(toks[1], "na\xC3\xAFve");
  EXPECT_EQ(normalize_nfc("e\xCC\x81"), "\xC3\xA9");
}

TEST(Tokenize, IdempotentOnSpaceJoin) {
  std::mt19937_64 rng(3);
  const char* pieces[] = {"Post-op", "it's", "3.5", "[**Name**]", "--", "x", "ICU", "na\xC3\xAFve", "'", "a-b-c"};
  std::uniform_int_distribution<std::size_t> pick(0, std::size(pieces) - 1);
  for (int round = 0; round < 300; ++round) {
    std::string text;
    for (int i = 0; i < 12; ++i) text += std::string(pieces[pick(rng)]) + (i % 3 ? " " : ",");
    for (bool lower : {true, false}) {
      auto t = tokenize(text, lower);
      EXPECT_EQ(tokenize(t.joined(), lower), t) << text;
      for (const auto& tok : t) EXPECT_FALSE(tok.empty());
    }
  }
}

TEST(NGrams, Examples) {
  TokenSeq seq{"the", "cat", "sat"};
  auto uni = ngrams(seq, 1);
  EXPECT_EQ(uni.counts.size(), 3u);
  EXPECT_EQ(uni.count({"the"}), 1u);
  auto bi = ngrams(seq, 2);
  EXPECT_EQ(bi.counts, (std::map<NGram, std::size_t>{{{"the", "cat"}, 1}, {{"cat", "sat"}, 1}}));
  EXPECT_TRUE(ngrams(TokenSeq{"the", "cat"}, 3).counts.empty());
  EXPECT_THROW(ngrams(seq, 0), InvalidArgument);
}

TEST(NGrams, TotalsProperty) {
  std::mt19937_64 rng(9);
  for (int round = 0; round < 500; ++round) {
    TokenSeq seq(oracles::random_tokens(rng, 0, 12, 4));
    for (std::size_t n = 1; n <= 5; ++n) {
      auto expected = seq.size() >= n ? seq.size() - n + 1 : 0;
      EXPECT_EQ(ngrams(seq, n).total(), expected);
    }
  }
}

TEST(Syllables, Examples) {
  EXPECT_EQ(count_syllables("cat"), 1u);
  EXPECT_EQ(count_syllables("hydrated"), 3u);
  EXPECT_EQ(count_syllables("a"), 1u);
  EXPECT_THROW(count_syllables(""), InvalidArgument);
}

TEST(Syllables, SilentEAndLeRules) {
  EXPECT_EQ(count_syllables("the"), 1u);
  EXPECT_EQ(count_syllables("hydrate"), 2u);
  EXPECT_EQ(count_syllables("table"), 2u);
  EXPECT_EQ(count_syllables("simple"), 2u);
  EXPECT_EQ(count_syllables("agree"), 2u);
  EXPECT_EQ(count_syllables("rhythm"), 1u);
  EXPECT_EQ(count_syllables("CABG"), 1u);
  EXPECT_EQ(count_syllables("120"), 1u);
}

TEST(Syllables, AtLeastOneForAlphabeticTokens) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> letter('a', 'z'), len(1, 12);
  for (int i = 0; i < 2000; ++i) {
    std::string w(static_cast<std::size_t>(len(rng)), 'a');
    for (auto& c : w) c = static_cast<char>(letter(rng));
    EXPECT_GE(count_syllables(w), 1u) << w;
  }
}

TEST(Helpers, ContentTokensAndTruncation) {
  EXPECT_EQ(content_tokens("which organ pumps blood"), (std::set<std::string>{"organ", "pumps", "blood"}));
  EXPECT_EQ(truncate_to_tokens("one two, three four.", 2), "one two");
  EXPECT_EQ(truncate_to_tokens("one two.", 5), "one two.");
}
