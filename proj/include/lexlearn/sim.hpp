#ifndef LEXLEARN_SIM_HPP
#define LEXLEARN_SIM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lexlearn/evidence.hpp"

namespace lexlearn {

/// Edit distance between two token sequences (unit insert/delete/substitute).
template <typename Seq>
std::size_t levenshtein(const Seq& a, const Seq& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

/// Seeded generator whose output is identical on every platform: raw
/// std::mt19937_64 words (the standard fixes that sequence), uniforms from the
/// top 53 bits, normals by Box-Muller. std:: distributions are avoided because
/// their algorithms are implementation-defined.
class PortableRng {
public:
    explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi], by rejection on the raw words.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return lo + static_cast<std::int64_t>(x % span);
    }

    /// Standard normal; uses both Box-Muller outputs.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// FNV-1a over the word's bytes, mixed with the run seed through splitmix64.
inline std::uint64_t word_seed(std::uint64_t seed, const std::string& word) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : word) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::uint64_t z = seed ^ h;
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

struct SimConfig {
    Lexicon ground_truth;  ///< must carry probabilities
    double confusability = 4.0;  ///< kappa: likelihood decay per unit edit distance
    std::map<std::string, double> confusability_override;
    int utterances_per_word = 100;
    std::map<std::string, int> utterances_override;
    double noise = 0.1;  ///< sigma of the log-normal jitter
    std::uint64_t seed = 1;
    double delta = 1e-5;

    double confusability_for(const std::string& word) const {
        auto it = confusability_override.find(word);
        return it == confusability_override.end() ? confusability : it->second;
    }

    int utterances_for(const std::string& word) const {
        auto it = utterances_override.find(word);
        return it == utterances_override.end() ? utterances_per_word : it->second;
    }
};

/// Reads `key=value` lines (`#` starts a comment). Keys: confusability,
/// confusability.<word>, noise, utterances_per_word, utterances_per_word.<word>,
/// seed, delta. The ground truth lexicon is supplied separately.
inline SimConfig parse_sim_config(std::string_view text) {
    SimConfig cfg;
    detail::for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
        std::string where = "config line " + std::to_string(line_no);
        std::string_view line = raw.substr(0, raw.find('#'));
        if (detail::blank(line)) return;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw Error(where + ": expected key=value");
        auto trim = [](std::string_view s) {
            while (!s.empty() && detail::is_space(s.front())) s.remove_prefix(1);
            while (!s.empty() && detail::is_space(s.back())) s.remove_suffix(1);
            return s;
        };
        std::string key(trim(line.substr(0, eq)));
        std::string_view value = trim(line.substr(eq + 1));
        const std::string per_word = "utterances_per_word.";
        const std::string kappa_word = "confusability.";
        if (key == "confusability") {
            cfg.confusability = detail::parse_double(value, where);
        } else if (key.rfind(kappa_word, 0) == 0 && key.size() > kappa_word.size()) {
            cfg.confusability_override[key.substr(kappa_word.size())] = detail::parse_double(value, where);
        } else if (key == "noise") {
            cfg.noise = detail::parse_double(value, where);
        } else if (key == "utterances_per_word") {
            cfg.utterances_per_word = static_cast<int>(detail::parse_int(value, where));
        } else if (key.rfind(per_word, 0) == 0 && key.size() > per_word.size()) {
            cfg.utterances_override[key.substr(per_word.size())] = static_cast<int>(detail::parse_int(value, where));
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(detail::parse_int(value, where));
        } else if (key == "delta") {
            cfg.delta = detail::parse_double(value, where);
        } else {
            throw Error(where + ": unknown key '" + key + "'");
        }
    });
    return cfg;
}

/// Synthetic evidence: for each ground-truth word and each of its utterances,
/// draw the spoken baseform b* from the truth distribution, set every
/// candidate's likelihood to exp(-kappa * edit_distance(b, b*)) times
/// log-normal jitter, scale the row to a maximum of 1 and floor at delta.
/// Large kappa gives sharp rows (distinct variants), small kappa soft rows
/// (confusable variants). Words absent from the truth get no evidence.
inline EvidenceMap simulate_evidence(const Lexicon& candidates, const SimConfig& cfg) {
    if (!(cfg.confusability >= 0.0)) throw Error("confusability must be non-negative");
    for (const auto& [w, k] : cfg.confusability_override)
        if (!(k >= 0.0)) throw Error("word '" + w + "': confusability must be non-negative");
    if (!(cfg.noise >= 0.0)) throw Error("noise must be non-negative");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw Error("delta must lie in (0,1)");

    EvidenceMap out;
    for (const auto& [word, truth] : cfg.ground_truth.entries) {
        if (!truth.has_probs()) throw Error("word '" + word + "': ground truth carries no probabilities");
        const CandidateSet* cands = candidates.find(word);
        if (!cands) throw Error("word '" + word + "': ground-truth word missing from candidates");
        std::vector<std::size_t> truth_col;
        for (const auto& p : truth.candidates()) {
            auto c = cands->find(p.phones);
            if (!c)
                throw Error("word '" + word + "': ground-truth baseform '" + to_string(p.phones) +
                            "' missing from candidates");
            truth_col.push_back(*c);
        }
        int n = cfg.utterances_for(word);
        const double kappa = cfg.confusability_for(word);
        if (n < 1) throw Error("word '" + word + "': utterance count must be positive");

        const std::size_t k = cands->size();
        std::vector<std::vector<std::size_t>> dist(truth_col.size(), std::vector<std::size_t>(k));
        for (std::size_t t = 0; t < truth_col.size(); ++t)
            for (std::size_t c = 0; c < k; ++c)
                dist[t][c] = levenshtein((*cands)[truth_col[t]].phones, (*cands)[c].phones);

        PortableRng rng(word_seed(cfg.seed, word));
        std::vector<std::string> utts;
        std::vector<double> tau;
        tau.reserve(static_cast<std::size_t>(n) * k);
        std::vector<double> row(k);
        for (int u = 0; u < n; ++u) {
            double draw = rng.uniform();
            std::size_t t = truth_col.size() - 1;
            double cum = 0.0;
            for (std::size_t i = 0; i < truth.probs().size(); ++i) {
                cum += truth.probs()[i];
                if (draw < cum) {
                    t = i;
                    break;
                }
            }
            double row_max = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                double d = static_cast<double>(dist[t][c]);
                double base = d == 0.0 ? 1.0 : std::exp(-kappa * d);
                double jitter = cfg.noise > 0.0 ? std::exp(cfg.noise * rng.normal()) : 1.0;
                row[c] = base * jitter;
                row_max = std::max(row_max, row[c]);
            }
            for (std::size_t c = 0; c < k; ++c) tau.push_back(row[c] == row_max ? 1.0 : row[c] / row_max);
            char id[32];
            std::snprintf(id, sizeof id, "%06d", u);
            utts.push_back("sim-" + word + "-" + id);
        }
        std::vector<Baseform> cols;
        for (const auto& p : cands->candidates()) cols.push_back(p.phones);
        out.emplace(word, EvidenceMatrix(word, std::move(utts), std::move(cols), std::move(tau), cfg.delta));
    }
    return out;
}

struct WordScore {
    std::string word;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvalReport {
    std::vector<WordScore> words;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double learned_prons_per_word = 0.0;
    double truth_prons_per_word = 0.0;
};

inline double f1_of(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

/// Set comparison by phone sequence; aggregates are micro-averaged over
/// (word, pronunciation) pairs.
inline EvalReport evaluate(const Lexicon& learned, const Lexicon& truth) {
    std::vector<std::string> only_learned, only_truth;
    for (const auto& [w, cs] : learned.entries)
        if (!truth.find(w)) only_learned.push_back(w);
    for (const auto& [w, cs] : truth.entries)
        if (!learned.find(w)) only_truth.push_back(w);
    if (!only_learned.empty() || !only_truth.empty()) {
        std::string msg = "vocabularies differ:";
        std::size_t shown = 0;
        for (const auto& w : only_learned)
            if (shown++ < 10) msg += " +" + w;
        for (const auto& w : only_truth)
            if (shown++ < 10) msg += " -" + w;
        if (shown > 10) msg += " ... (" + std::to_string(shown) + " total)";
        throw Error(msg);
    }

    EvalReport rep;
    std::size_t hits = 0, n_learned = 0, n_truth = 0;
    for (const auto& [w, lcs] : learned.entries) {
        const CandidateSet& tcs = *truth.find(w);
        std::size_t common = 0;
        for (const auto& p : lcs.candidates())
            if (tcs.find(p.phones)) ++common;
        WordScore ws{w};
        ws.precision = lcs.empty() ? 0.0 : static_cast<double>(common) / lcs.size();
        ws.recall = tcs.empty() ? 0.0 : static_cast<double>(common) / tcs.size();
        ws.f1 = f1_of(ws.precision, ws.recall);
        rep.words.push_back(ws);
        hits += common;
        n_learned += lcs.size();
        n_truth += tcs.size();
    }
    rep.precision = n_learned ? static_cast<double>(hits) / n_learned : 0.0;
    rep.recall = n_truth ? static_cast<double>(hits) / n_truth : 0.0;
    rep.f1 = f1_of(rep.precision, rep.recall);
    if (!learned.empty()) {
        rep.learned_prons_per_word = static_cast<double>(n_learned) / learned.size();
        rep.truth_prons_per_word = static_cast<double>(n_truth) / truth.size();
    }
    return rep;
}

/// `word TAB precision TAB recall TAB f1` per word, then one `<ALL>` line with
/// the micro-averaged aggregate.
inline std::string format_eval_lines(const EvalReport& rep) {
    std::ostringstream out;
    for (const auto& w : rep.words)
        out << w.word << '\t' << detail::fixed6(w.precision) << '\t' << detail::fixed6(w.recall) << '\t'
            << detail::fixed6(w.f1) << '\n';
    out << "<ALL>\t" << detail::fixed6(rep.precision) << '\t' << detail::fixed6(rep.recall) << '\t'
        << detail::fixed6(rep.f1) << '\n';
    return out.str();
}

inline std::string format_eval_table(const EvalReport& rep) {
    std::ostringstream out;
    char buf[256];
    std::size_t width = 4;
    for (const auto& w : rep.words) width = std::max(width, w.word.size());
    std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %9s\n", static_cast<int>(width), "word", "precision", "recall", "f1");
    out << buf;
    for (const auto& w : rep.words) {
        std::snprintf(buf, sizeof buf, "%-*s  %9.4f  %9.4f  %9.4f\n", static_cast<int>(width), w.word.c_str(),
                      w.precision, w.recall, w.f1);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "%-*s  %9.4f  %9.4f  %9.4f\n", static_cast<int>(width), "ALL", rep.precision,
                  rep.recall, rep.f1);
    out << buf;
    std::snprintf(buf, sizeof buf, "prons/word: learned %.4f, truth %.4f\n", rep.learned_prons_per_word,
                  rep.truth_prons_per_word);
    out << buf;
    return out.str();
}

/// Shape of a randomly generated word list for end-to-end runs.
struct TaskSpec {
    int num_words = 200;
    int min_truth = 1;
    int max_truth = 3;
    int distractors = 5;   ///< G2P-style distractors per word, edit distance 1-2 from the main baseform
    int min_len = 3;
    int max_len = 7;
    int inventory = 32;    ///< phone inventory size
    double min_minor = 0.1;
    double max_minor = 0.3;
    std::uint64_t seed = 7;
};

struct SyntheticTask {
    Lexicon truth;       ///< with probabilities; main baseform tagged g2p, variants pd
    Lexicon candidates;  ///< truth baseforms plus distractors, in shuffled order
};

/// Random ground-truth lexicon and an inflated candidate pool. Extra true
/// variants are kept at edit distance >= 3 from each other so they behave as
/// distinct pronunciations; distractors sit 1-2 edits from the main baseform.
inline SyntheticTask make_synthetic_task(const TaskSpec& spec) {
    if (spec.num_words < 1 || spec.min_truth < 1 || spec.max_truth < spec.min_truth || spec.distractors < 0 ||
        spec.min_len < 2 || spec.max_len < spec.min_len || spec.inventory < 4)
        throw Error("invalid synthetic task spec");
    PortableRng rng(spec.seed);
    std::vector<Phone> inventory;
    for (int i = 0; i < spec.inventory; ++i) {
        char name[16];
        std::snprintf(name, sizeof name, "P%02d", i);
        inventory.emplace_back(name);
    }
    auto random_phone = [&] { return inventory[static_cast<std::size_t>(rng.uniform_int(0, spec.inventory - 1))]; };
    auto random_baseform = [&] {
        Baseform b;
        auto len = rng.uniform_int(spec.min_len, spec.max_len);
        for (std::int64_t i = 0; i < len; ++i) b.push_back(random_phone());
        return b;
    };
    auto mutate = [&](Baseform b, int edits) {
        for (int e = 0; e < edits; ++e) {
            auto op = rng.uniform_int(0, 2);
            auto pos = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(b.size()) - 1));
            if (op == 0 || b.size() <= 2)
                b[pos] = random_phone();
            else if (op == 1)
                b.insert(b.begin() + static_cast<std::ptrdiff_t>(pos), random_phone());
            else
                b.erase(b.begin() + static_cast<std::ptrdiff_t>(pos));
        }
        return b;
    };

    SyntheticTask task;
    for (int w = 0; w < spec.num_words; ++w) {
        char name[16];
        std::snprintf(name, sizeof name, "w%04d", w);
        std::string word = name;
        auto n_truth = rng.uniform_int(spec.min_truth, spec.max_truth);

        std::vector<Baseform> truth_forms{random_baseform()};
        while (static_cast<std::int64_t>(truth_forms.size()) < n_truth) {
            Baseform b = random_baseform();
            bool far = std::all_of(truth_forms.begin(), truth_forms.end(),
                                   [&](const Baseform& t) { return levenshtein(t, b) >= 3; });
            if (far) truth_forms.push_back(std::move(b));
        }

        std::vector<double> probs(truth_forms.size());
        double minor_total = 0.0;
        for (std::size_t i = 1; i < probs.size(); ++i) {
            double p = spec.min_minor + (spec.max_minor - spec.min_minor) * rng.uniform();
            probs[i] = std::round(p * 1e6) / 1e6;
            minor_total += probs[i];
        }
        probs[0] = std::round((1.0 - minor_total) * 1e6) / 1e6;

        CandidateSet& truth = task.truth.entry(word);
        for (std::size_t i = 0; i < truth_forms.size(); ++i)
            truth.add(Pronunciation(truth_forms[i], i == 0 ? Source::G2P : Source::PhoneticDecoding));
        truth.set_probs(probs);

        std::vector<Pronunciation> pool(truth.candidates().begin(), truth.candidates().end());
        int made = 0;
        while (made < spec.distractors) {
            Baseform d = mutate(truth_forms[0], static_cast<int>(rng.uniform_int(1, 2)));
            std::size_t d0 = levenshtein(d, truth_forms[0]);
            if (d0 < 1 || d0 > 2) continue;
            bool fresh = std::none_of(pool.begin(), pool.end(), [&](const Pronunciation& p) { return p.phones == d; });
            if (!fresh) continue;
            pool.emplace_back(std::move(d), Source::G2P);
            ++made;
        }
        // Fisher-Yates with the portable generator.
        for (std::size_t i = pool.size(); i > 1; --i)
            std::swap(pool[i - 1], pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
        CandidateSet& cands = task.candidates.entry(word);
        for (auto& p : pool) cands.add(std::move(p));
    }
    return task;
}

}  // namespace lexlearn

#endif  // LEXLEARN_SIM_HPP
