#include <gtest/gtest.h>

#include <random>

#include "lexlearn/lexicon.hpp"

using namespace lexlearn;

TEST(Lexicon, SingleLine) {
    auto lex = parse_lexicon("us\tref\tAH S\n");
    ASSERT_EQ(lex.size(), 1u);
    const auto& cs = lex.entries.at("us");
    ASSERT_EQ(cs.size(), 1u);
    EXPECT_EQ(to_string(cs[0].phones), "AH S");
    EXPECT_EQ(cs[0].source, Source::Reference);
    EXPECT_FALSE(cs.has_probs());
}

TEST(Lexicon, MachinePair) {
    auto lex = parse_lexicon("machine\tg2p\tM AH SH IY N\nmachine\tpd\tM IH SH IY N\n");
    const auto& cs = lex.entries.at("machine");
    ASSERT_EQ(cs.size(), 2u);
    EXPECT_EQ(to_string(cs[0].phones), "M AH SH IY N");
    EXPECT_EQ(cs[0].source, Source::G2P);
    EXPECT_EQ(to_string(cs[1].phones), "M IH SH IY N");
    EXPECT_EQ(cs[1].source, Source::PhoneticDecoding);
}

TEST(Lexicon, DuplicateCollapsesKeepingFirstSource) {
    auto lex = parse_lexicon("a\tpd\tX Y\na\tref\tX Y\n");
    const auto& cs = lex.entries.at("a");
    ASSERT_EQ(cs.size(), 1u);
    EXPECT_EQ(cs[0].source, Source::PhoneticDecoding);
}

TEST(Lexicon, AddingDuplicateNeverGrows) {
    CandidateSet cs("w");
    EXPECT_TRUE(cs.add(Pronunciation(parse_baseform("A B"), Source::G2P)));
    EXPECT_FALSE(cs.add(Pronunciation(parse_baseform("A B"), Source::Reference)));
    EXPECT_EQ(cs.size(), 1u);
}

TEST(Lexicon, MalformedLinesNameTheLine) {
    auto expect_error = [](const std::string& text, const std::string& needle) {
        try {
            parse_lexicon(text);
            FAIL() << "no error for: " << text;
        } catch (const Error& e) {
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    expect_error("a\tg2p\tA\nb\tg2p\n", "line 2");
    expect_error("a\tfoo\tA B\n", "unknown source");
    expect_error("a\tg2p\t   \n", "line 1");
    expect_error("a\tg2p\tA\t0.5\na\tg2p\tB\n", "some but not all");
    expect_error("a\tg2p\tA\tabc\n", "not a number");
    expect_error("a\tg2p\tA\t0.7\na\tg2p\tB\t0.7\n", "sum");
}

TEST(Lexicon, BlankLinesAndCrlfAccepted) {
    auto lex = parse_lexicon("\n  \t \n");
    EXPECT_TRUE(lex.empty());
    lex = parse_lexicon("x\tg2p\tA B\r\n\r\n");
    EXPECT_EQ(lex.entries.at("x").size(), 1u);
}

TEST(Lexicon, SerializeEmpty) { EXPECT_EQ(serialize_lexicon(Lexicon{}, false), ""); }

TEST(Lexicon, SerializeProbabilitiesSixDecimals) {
    Lexicon lex;
    auto& cs = lex.entry("machine");
    cs.add(Pronunciation(parse_baseform("M AH SH IY N"), Source::G2P));
    cs.add(Pronunciation(parse_baseform("M IH SH IY N"), Source::PhoneticDecoding));
    cs.set_probs({0.987, 0.013});
    EXPECT_EQ(serialize_lexicon(lex, true),
              "machine\tg2p\tM AH SH IY N\t0.987000\nmachine\tpd\tM IH SH IY N\t0.013000\n");
}

TEST(Lexicon, SerializeWithoutProbsIsError) {
    auto lex = parse_lexicon("a\tg2p\tA\n");
    EXPECT_THROW(serialize_lexicon(lex, true), Error);
}

TEST(Lexicon, WordsSortedOnOutput) {
    auto lex = parse_lexicon("zeta\tg2p\tZ\nalpha\tg2p\tA\n");
    EXPECT_EQ(serialize_lexicon(lex, false), "alpha\tg2p\tA\nzeta\tg2p\tZ\n");
}

TEST(Lexicon, PhoneRejectsWhitespace) {
    EXPECT_THROW(Phone("A B"), Error);
    EXPECT_THROW(Phone(""), Error);
}

// parse(serialize(L)) == L over random lexicons, with and without probabilities.
TEST(LexiconProperty, RoundTrip) {
    std::mt19937_64 rng(20240611);
    std::uniform_int_distribution<int> n_words(0, 12), n_cands(1, 5), n_phones(1, 6), phone(0, 9), src(0, 2);
    for (int trial = 0; trial < 300; ++trial) {
        Lexicon lex;
        bool probs = trial % 2 == 0;
        int words = n_words(rng);
        for (int w = 0; w < words; ++w) {
            auto& cs = lex.entry("w" + std::to_string(rng() % 1000));
            if (!cs.empty()) continue;
            int k = n_cands(rng);
            for (int c = 0; c < k; ++c) {
                Baseform b;
                int len = n_phones(rng);
                for (int i = 0; i < len; ++i) b.emplace_back("P" + std::to_string(phone(rng)));
                cs.add(Pronunciation(b, static_cast<Source>(src(rng))));
            }
            if (probs) {
                // Parsed values are what the 6-decimal text denotes.
                std::vector<double> p(cs.size());
                long long left = 1000000;
                for (std::size_t i = 0; i + 1 < p.size(); ++i) {
                    long long take = static_cast<long long>(rng() % static_cast<unsigned long long>(left + 1));
                    p[i] = std::stod(detail::fixed6(take / 1e6));
                    left -= take;
                }
                p.back() = std::stod(detail::fixed6(left / 1e6));
                cs.set_probs(p);
            }
        }
        std::string text = serialize_lexicon(lex, probs);
        Lexicon back = parse_lexicon(text);
        ASSERT_EQ(back, lex) << text;
        ASSERT_EQ(serialize_lexicon(back, probs), text);
    }
}

TEST(SelectionConfig, Validation) {
    SelectionConfig cfg;
    EXPECT_TRUE(cfg.validate().empty());
    cfg.delta = 1e-3;
    EXPECT_EQ(cfg.validate().size(), 1u);  // warning only
    cfg.delta = 1.0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = SelectionConfig{};
    cfg.alpha[Source::G2P] = 1.5;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = SelectionConfig{};
    cfg.beta[Source::PhoneticDecoding] = -1;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = SelectionConfig{};
    cfg.top_k = 0;
    EXPECT_THROW(cfg.validate(), Error);
}

TEST(SelectionConfig, Defaults) {
    SelectionConfig cfg;
    EXPECT_EQ(cfg.delta, 1e-5);
    EXPECT_EQ(cfg.alpha[Source::G2P], 0.02);
    EXPECT_EQ(cfg.alpha[Source::PhoneticDecoding], 0.01);
    EXPECT_EQ(cfg.alpha[Source::Reference], 0.0);
    EXPECT_EQ(cfg.beta[Source::G2P], 10.0);
    EXPECT_EQ(cfg.beta[Source::PhoneticDecoding], 10.0);
    EXPECT_EQ(cfg.beta[Source::Reference], 0.0);
    EXPECT_EQ(cfg.top_k, 10);
}
