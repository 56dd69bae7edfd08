#include "posbias/textproc.hpp"

#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "posbias/error.hpp"
#include "test_support.hpp"

namespace posbias {
namespace {

std::vector<std::string> split(std::string_view text) { return split_sentences(text).sentences; }

TEST(SentenceSplitter, SplitsOnTerminalPunctuation) {
  EXPECT_EQ(split("The cat sat. The dog ran! Did it rain? Yes."),
            (std::vector<std::string>{"The cat sat.", "The dog ran!", "Did it rain?", "Yes."}));
}

TEST(SentenceSplitter, HonorsAbbreviations) {
  EXPECT_EQ(split("Dr. Smith left. He returned."), (std::vector<std::string>{"Dr. Smith left.", "He returned."}));
  EXPECT_EQ(split("Mr. Jones met Mrs. Lee at 5 p.m. today."),
            (std::vector<std::string>{"Mr. Jones met Mrs. Lee at 5 p.m. today."}));
  EXPECT_EQ(split("The U.S. Army moved. It was late."),
            (std::vector<std::string>{"The U.S. Army moved.", "It was late."}));
}

TEST(SentenceSplitter, HonorsInitials) {
  EXPECT_EQ(split("J. R. Tolkien wrote books. They sold well."),
            (std::vector<std::string>{"J. R. Tolkien wrote books.", "They sold well."}));
}

TEST(SentenceSplitter, NoBoundaryBeforeLowercase) {
  EXPECT_EQ(split("Prices rose by 3.5 percent. the rest fell."),
            (std::vector<std::string>{"Prices rose by 3.5 percent. the rest fell."}));
}

TEST(SentenceSplitter, KeepsClosingQuotesWithSentence) {
  EXPECT_EQ(split("He said \"Stop.\" Then he left."),
            (std::vector<std::string>{"He said \"Stop.\"", "Then he left."}));
  EXPECT_EQ(split("It ended (finally.) Everyone cheered."),
            (std::vector<std::string>{"It ended (finally.)", "Everyone cheered."}));
}

TEST(SentenceSplitter, BoundaryBeforeDigitAndQuote) {
  EXPECT_EQ(split("It was cold. 12 people came. \"Why?\" she asked."),
            (std::vector<std::string>{"It was cold.", "12 people came.", "\"Why?\" she asked."}));
}

TEST(SentenceSplitter, KeepsTrailingFragment) {
  EXPECT_EQ(split("First one. second part continues. Third without stop"),
            (std::vector<std::string>{"First one. second part continues.", "Third without stop"}));
}

TEST(SentenceSplitter, EmptyAndWhitespaceInput) {
  EXPECT_TRUE(split_sentences("").empty());
  EXPECT_TRUE(split_sentences("   \n\t ").empty());
  EXPECT_EQ(split("  Lone sentence.  "), (std::vector<std::string>{"Lone sentence."}));
}

TEST(SentenceSplitter, RunsOfTerminals) {
  EXPECT_EQ(split("Really?! Yes... Fine."), (std::vector<std::string>{"Really?!", "Yes...", "Fine."}));
}

TEST(SentenceSplitter, CustomAbbreviation) {
  SentenceSplitter splitter;
  EXPECT_EQ(splitter.split("It costs cca. Ten dollars.").size(), 2u);
  splitter.add_abbreviation("Cca.");
  EXPECT_TRUE(splitter.is_abbreviation("cca"));
  EXPECT_EQ(splitter.split("It costs cca. Ten dollars.").size(), 1u);
}

TEST(SentenceSplitter, LoadAbbreviationFile) {
  testing::TempDir dir;
  testing::spit(dir / "abbrev.txt", "# custom list\n\nillus\n  Sec  \n");
  SentenceSplitter splitter;
  EXPECT_EQ(splitter.split("See Illus. Two and Sec. Four.").size(), 3u);
  splitter.load_abbreviations((dir / "abbrev.txt").string());
  EXPECT_TRUE(splitter.is_abbreviation("illus"));
  EXPECT_TRUE(splitter.is_abbreviation("sec"));
  EXPECT_EQ(splitter.split("See Illus. Two and Sec. Four.").size(), 1u);
}

TEST(SentenceSplitter, MissingAbbreviationFileIsIoError) {
  SentenceSplitter splitter;
  EXPECT_THROW(splitter.load_abbreviations("/nonexistent/abbrev.txt"), IoError);
}

// Random texts built from a small vocabulary with generated boundaries.
std::string random_text(std::mt19937_64& rng, std::size_t& expected) {
  static const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "omega", "kappa"};
  static const std::vector<std::string> terminals = {".", "!", "?"};
  std::uniform_int_distribution<std::size_t> sentence_count(1, 8), word_count(1, 9);
  std::uniform_int_distribution<std::size_t> pick_word(0, words.size() - 1), pick_term(0, 2);
  expected = sentence_count(rng);
  std::string text;
  for (std::size_t s = 0; s < expected; ++s) {
    if (s) text += ' ';
    const auto n = word_count(rng);
    for (std::size_t w = 0; w < n; ++w) {
      auto word = words[pick_word(rng)];
      if (w == 0) word[0] = static_cast<char>(word[0] - 'a' + 'A');
      if (w) text += ' ';
      text += word;
    }
    text += terminals[pick_term(rng)];
  }
  return text;
}

TEST(SentenceSplitterProperty, RecoversGeneratedSentencesAndIsIdempotent) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t expected = 0;
    const auto text = random_text(rng, expected);
    const auto sentences = split_sentences(text);
    ASSERT_EQ(sentences.size(), expected) << text;
    for (const auto& sentence : sentences.sentences) {
      EXPECT_EQ(split_sentences(sentence).sentences, std::vector<std::string>{sentence});
    }
  }
}

TEST(Tokenize, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(tokenize("The Cat, sat-on the MAT!"), (TokenList{"the", "cat", "sat", "on", "the", "mat"}));
  EXPECT_EQ(tokenize("It's 3.5 km"), (TokenList{"it", "s", "3", "5", "km"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize(" ,.;! ").empty());
}

TEST(Tokenize, NonAsciiBytesSeparate) {
  EXPECT_EQ(tokenize("caf\xC3\xA9 au lait"), (TokenList{"caf", "au", "lait"}));
}

TEST(TokenizeProperty, TokensAreLowercaseAlnumAndStable) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> byte(32, 126), length(0, 60);
  for (int trial = 0; trial < 1000; ++trial) {
    std::string text;
    const auto n = length(rng);
    for (int i = 0; i < n; ++i) text += static_cast<char>(byte(rng));
    const auto tokens = tokenize(text);
    std::string joined;
    for (const auto& token : tokens) {
      ASSERT_FALSE(token.empty());
      for (char c : token) {
        ASSERT_TRUE((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) << text;
      }
      joined += token + ' ';
    }
    EXPECT_EQ(tokenize(joined), tokens);
  }
}

TEST(Ngrams, CountsWithMultiplicity) {
  const TokenList tokens{"a", "b", "a", "b"};
  const auto bigrams = ngrams(tokens, 2);
  EXPECT_EQ(bigrams.size(), 2u);
  EXPECT_EQ(bigrams.at(Ngram{"a", "b"}), 2u);
  EXPECT_EQ(bigrams.at(Ngram{"b", "a"}), 1u);
  EXPECT_EQ(ngrams(tokens, 1).at(Ngram{"a"}), 2u);
  EXPECT_TRUE(ngrams(tokens, 5).empty());
  EXPECT_TRUE(ngrams({}, 1).empty());
}

TEST(Ngrams, ZeroIsInvalid) { EXPECT_THROW(ngrams({"a"}, 0), std::invalid_argument); }

TEST(NgramsProperty, TotalCountIsWindowCount) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> length(0, 30), letter(0, 3);
  for (int trial = 0; trial < 300; ++trial) {
    TokenList tokens(length(rng));
    for (auto& t : tokens) t = std::string(1, static_cast<char>('a' + letter(rng)));
    for (std::size_t n = 1; n <= 3; ++n) {
      std::size_t total = 0;
      for (const auto& [gram, count] : ngrams(tokens, n)) {
        EXPECT_EQ(gram.size(), n);
        total += count;
      }
      EXPECT_EQ(total, tokens.size() >= n ? tokens.size() - n + 1 : 0);
    }
  }
}

}  // namespace
}  // namespace posbias
