#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support/oracles.hpp"

using namespace lexlearn;
using lexlearn::testing::bf;

namespace {

SimConfig base_config(const std::string& truth_text) {
    SimConfig cfg;
    cfg.ground_truth = parse_lexicon(truth_text);
    cfg.utterances_per_word = 50;
    cfg.seed = 99;
    return cfg;
}

const char* kCands = "w\tg2p\tA B C\nw\tg2p\tA B D\nw\tpd\tX Y Z W\n";

}  // namespace

TEST(Levenshtein, Basics) {
    EXPECT_EQ(levenshtein(bf("AH S"), bf("Y UW EH S")), 3u);
    EXPECT_EQ(levenshtein(bf("M AH SH IY N"), bf("M IH SH IY N")), 1u);
    EXPECT_EQ(levenshtein(bf("A"), bf("A")), 0u);
    EXPECT_EQ(levenshtein(std::string("kitten"), std::string("sitting")), 3u);
}

TEST(PortableRng, KnownSequence) {
    // First output of mt19937_64 with the default seed is fixed by the standard.
    PortableRng rng(5489u);
    EXPECT_EQ(rng.next_u64(), 14514284786278117030ull);
    PortableRng a(1), b(1);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Simulate, SharpLimit) {
    auto cfg = base_config("w\tg2p\tA B C\t1.0\n");
    cfg.confusability = std::numeric_limits<double>::infinity();
    cfg.noise = 0.0;
    auto ev = simulate_evidence(parse_lexicon(kCands), cfg).at("w");
    for (std::size_t r = 0; r < ev.rows(); ++r) {
        EXPECT_EQ(ev(r, 0), 1.0);
        EXPECT_EQ(ev(r, 1), cfg.delta);
        EXPECT_EQ(ev(r, 2), cfg.delta);
    }
}

TEST(Simulate, FullyConfusableLimit) {
    auto cfg = base_config("w\tg2p\tA B C\t0.5\nw\tpd\tX Y Z W\t0.5\n");
    cfg.confusability = 0.0;
    cfg.noise = 0.0;
    auto ev = simulate_evidence(parse_lexicon(kCands), cfg).at("w");
    for (double v : ev.values()) EXPECT_EQ(v, 1.0);
    auto t = greedy_select(ev, {Source::G2P, Source::G2P, Source::PhoneticDecoding}, SelectionConfig{});
    EXPECT_EQ(t.final_set.size(), 1u);
    EXPECT_TRUE(t.guard_triggered);
    for (const auto& s : t.steps) EXPECT_NEAR(s.removed.delta_L, 0.0, 1e-8);
}

TEST(Simulate, DeterministicAndBounded) {
    auto cfg = base_config("w\tg2p\tA B C\t0.7\nw\tpd\tX Y Z W\t0.3\n");
    auto cands = parse_lexicon(kCands);
    auto a = simulate_evidence(cands, cfg);
    auto b = simulate_evidence(cands, cfg);
    EXPECT_EQ(serialize_evidence(a), serialize_evidence(b));
    const auto& m = a.at("w");
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double mx = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) {
            EXPECT_GE(m(r, c), cfg.delta);
            EXPECT_LE(m(r, c), 1.0);
            mx = std::max(mx, m(r, c));
        }
        EXPECT_EQ(mx, 1.0);
    }
    cfg.seed = 100;
    EXPECT_NE(serialize_evidence(simulate_evidence(cands, cfg)), serialize_evidence(a));
}

TEST(Simulate, PerWordOverrides) {
    auto cfg = base_config("w\tg2p\tA B C\t1.0\n");
    cfg.utterances_override["w"] = 7;
    EXPECT_EQ(simulate_evidence(parse_lexicon(kCands), cfg).at("w").rows(), 7u);
}

TEST(Simulate, PreconditionErrorsNameWord) {
    auto cfg = base_config("v\tg2p\tA\t1.0\n");
    try {
        simulate_evidence(parse_lexicon(kCands), cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("'v'"), std::string::npos);
    }
    cfg = base_config("w\tg2p\tQ Q\t1.0\n");
    EXPECT_THROW(simulate_evidence(parse_lexicon(kCands), cfg), Error);
}

// Raising kappa never shrinks the mean margin between the true candidate and its
// nearest competitor.
TEST(SimProperty, MarginMonotoneInKappa) {
    auto cands = parse_lexicon("w\tg2p\tA B C\nw\tg2p\tA B D\nw\tg2p\tA X D\nw\tpd\tX Y Z W\n");
    auto cfg = base_config("w\tg2p\tA B C\t1.0\n");
    auto margin = [&](double kappa) {
        cfg.confusability = kappa;
        auto m = simulate_evidence(cands, cfg).at("w");
        double total = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            double other = 0.0;
            for (std::size_t c = 1; c < m.cols(); ++c) other = std::max(other, m(r, c));
            total += m(r, 0) - other;
        }
        return total / m.rows();
    };
    double last = -INFINITY;
    for (double kappa : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
        double mgn = margin(kappa);
        EXPECT_GE(mgn, last - 1e-12) << "kappa " << kappa;
        last = mgn;
    }
}

TEST(SimConfigFile, Parse) {
    auto cfg = parse_sim_config("# comment\nconfusability = 2.5\nconfusability.us=4\nnoise=0\nutterances_per_word=12\n"
                                "utterances_per_word.us=30\nseed=42  # trailing\ndelta=1e-6\n");
    EXPECT_EQ(cfg.confusability, 2.5);
    EXPECT_EQ(cfg.confusability_for("us"), 4.0);
    EXPECT_EQ(cfg.noise, 0.0);
    EXPECT_EQ(cfg.utterances_for("x"), 12);
    EXPECT_EQ(cfg.utterances_for("us"), 30);
    EXPECT_EQ(cfg.seed, 42u);
    EXPECT_EQ(cfg.delta, 1e-6);
    EXPECT_THROW(parse_sim_config("bogus=1\n"), Error);
    EXPECT_THROW(parse_sim_config("noise\n"), Error);
}

TEST(Evaluate, Examples) {
    auto truth = parse_lexicon("a\tg2p\tA\nb\tg2p\tB\n");
    auto same = evaluate(truth, truth);
    EXPECT_EQ(same.precision, 1.0);
    EXPECT_EQ(same.recall, 1.0);
    EXPECT_EQ(same.f1, 1.0);

    auto extra = evaluate(parse_lexicon("a\tg2p\tA\na\tpd\tA2\nb\tg2p\tB\n"), truth);
    EXPECT_EQ(extra.words[0].precision, 0.5);
    EXPECT_EQ(extra.words[0].recall, 1.0);
    EXPECT_NEAR(extra.precision, 2.0 / 3.0, 1e-15);
    EXPECT_EQ(extra.learned_prons_per_word, 1.5);

    auto disjoint = evaluate(parse_lexicon("a\tg2p\tZ\nb\tg2p\tY\n"), truth);
    EXPECT_EQ(disjoint.words[0].f1, 0.0);
    EXPECT_EQ(disjoint.f1, 0.0);
}

TEST(Evaluate, VocabularyMismatchListsWords) {
    try {
        evaluate(parse_lexicon("a\tg2p\tA\nc\tg2p\tC\n"), parse_lexicon("a\tg2p\tA\nb\tg2p\tB\n"));
        FAIL();
    } catch (const Error& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("+c"), std::string::npos);
        EXPECT_NE(msg.find("-b"), std::string::npos);
    }
}

TEST(EvaluateProperty, SwapExchangesPrecisionAndRecall) {
    auto task = make_synthetic_task({.num_words = 30, .seed = 3});
    auto learned = g2p_one_best(task.candidates);
    auto ab = evaluate(learned, task.truth);
    auto ba = evaluate(task.truth, learned);
    EXPECT_EQ(ab.precision, ba.recall);
    EXPECT_EQ(ab.recall, ba.precision);
    EXPECT_EQ(ab.f1, ba.f1);
    for (std::size_t i = 0; i < ab.words.size(); ++i) {
        EXPECT_EQ(ab.words[i].precision, ba.words[i].recall);
        EXPECT_EQ(ab.words[i].f1, ba.words[i].f1);
    }
}

TEST(SyntheticTask, Shape) {
    auto task = make_synthetic_task({.num_words = 50, .seed = 11});
    ASSERT_EQ(task.truth.size(), 50u);
    for (const auto& [w, truth] : task.truth.entries) {
        ASSERT_GE(truth.size(), 1u);
        ASSERT_LE(truth.size(), 3u);
        const auto& cands = task.candidates.entries.at(w);
        EXPECT_EQ(cands.size(), truth.size() + 5);
        for (const auto& p : truth.candidates()) EXPECT_TRUE(cands.find(p.phones));
        for (const auto& p : cands.candidates()) {
            if (truth.find(p.phones)) continue;
            auto d = levenshtein(p.phones, truth[0].phones);
            EXPECT_GE(d, 1u);
            EXPECT_LE(d, 2u);
        }
    }
    auto again = make_synthetic_task({.num_words = 50, .seed = 11});
    EXPECT_EQ(again.candidates, task.candidates);
}
