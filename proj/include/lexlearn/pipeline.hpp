#ifndef LEXLEARN_PIPELINE_HPP
#define LEXLEARN_PIPELINE_HPP

#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "lexlearn/baselines.hpp"
#include "lexlearn/evidence.hpp"
#include "lexlearn/selector.hpp"

namespace lexlearn {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. If any calls throw, the
/// exception of the lowest index is rethrown so failures do not depend on
/// scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    if (jobs < 1) throw Error("--jobs must be at least 1");
    std::vector<std::exception_ptr> errors(n);
    auto work = [&](std::atomic<std::size_t>& next) {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::atomic<std::size_t> next{0};
    std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    if (threads <= 1) {
        work(next);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back([&] { work(next); });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct RunCounts {
    std::size_t words = 0;
    std::size_t words_selected = 0;  ///< words with evidence
    std::size_t words_bypassed = 0;  ///< words without evidence
    std::size_t candidates_in = 0;
    std::size_t candidates_out = 0;
};

struct LexiconRun {
    Lexicon lexicon;    ///< every word carries probabilities
    std::string trace;  ///< selection report (empty for baselines)
    RunCounts counts;
};

namespace detail {

inline CandidateSet with_probs(CandidateSet cs, std::vector<double> probs) {
    cs.set_probs(std::move(probs));
    return cs;
}

inline CandidateSet uniform_probs(CandidateSet cs) {
    std::vector<double> p(cs.size(), 1.0 / static_cast<double>(cs.size()));
    return with_probs(std::move(cs), std::move(p));
}

/// Words with no acoustic examples keep their reference candidates, else their
/// top G2P candidate, else (phonetic-decoding only) their first candidate.
inline CandidateSet bypass(const CandidateSet& cs) {
    CandidateSet out(cs.word());
    for (const auto& p : cs.candidates())
        if (p.source == Source::Reference) out.add(p);
    if (out.empty())
        for (const auto& p : cs.candidates())
            if (p.source == Source::G2P) {
                out.add(p);
                break;
            }
    if (out.empty()) out.add(cs[0]);
    return uniform_probs(std::move(out));
}

inline void check_evidence_words(const Lexicon& lex, const EvidenceMap& ev) {
    for (const auto& [word, m] : ev)
        if (!lex.find(word)) throw Error("evidence references word '" + word + "' absent from the lexicon");
}

/// Evidence re-laid in lexicon order then cut to the top-k candidates.
struct PreparedWord {
    EvidenceMatrix matrix;
    std::vector<Source> sources;
};

inline PreparedWord prepare(const CandidateSet& cs, const EvidenceMatrix& m, int top_k) {
    EvidenceMatrix aligned = m.align_to(cs);
    auto keep = top_k_columns(aligned, top_k);
    PreparedWord out{aligned.select_columns(keep), {}};
    for (std::size_t c : keep) out.sources.push_back(cs[c].source);
    return out;
}

template <typename PerWord>
LexiconRun run_per_word(const Lexicon& lex, const EvidenceMap& ev, int jobs, PerWord&& per_word) {
    check_evidence_words(lex, ev);
    std::vector<const CandidateSet*> words;
    for (const auto& [w, cs] : lex.entries) words.push_back(&cs);

    std::vector<CandidateSet> results(words.size());
    std::vector<std::string> traces(words.size());
    parallel_for(words.size(), jobs, [&](std::size_t i) {
        const CandidateSet& cs = *words[i];
        auto it = ev.find(cs.word());
        if (it == ev.end()) {
            results[i] = bypass(cs);
        } else {
            std::tie(results[i], traces[i]) = per_word(cs, it->second);
        }
    });

    LexiconRun run;
    for (std::size_t i = 0; i < words.size(); ++i) {
        ++run.counts.words;
        if (ev.count(words[i]->word()))
            ++run.counts.words_selected;
        else
            ++run.counts.words_bypassed;
        run.counts.candidates_in += words[i]->size();
        run.counts.candidates_out += results[i].size();
        run.trace += traces[i];
        run.lexicon.entries.emplace(words[i]->word(), std::move(results[i]));
    }
    return run;
}

}  // namespace detail

/// Per word with evidence: align to the lexicon, keep the top-k candidates by
/// average posterior, then greedy likelihood-reduction selection. The learned
/// lexicon carries the final EM probabilities.
inline LexiconRun select_lexicon(const Lexicon& lex, const EvidenceMap& ev, const SelectionConfig& cfg, int jobs = 1) {
    cfg.validate();
    return detail::run_per_word(lex, ev, jobs, [&](const CandidateSet& cs, const EvidenceMatrix& m) {
        auto prepared = detail::prepare(cs, m, cfg.top_k);
        SelectionTrace trace = greedy_select(prepared.matrix, prepared.sources, cfg);
        auto text = format_trace(trace);
        return std::make_pair(detail::with_probs(std::move(trace.final_set), std::move(trace.final_theta.theta)),
                              std::move(text));
    });
}

/// Probability-threshold baseline over the same top-k pruned evidence.
/// Survivors' probabilities are renormalized.
inline LexiconRun pp_select_lexicon(const Lexicon& lex, const EvidenceMap& ev, const SelectionConfig& cfg,
                                    double pp_threshold, int jobs = 1) {
    cfg.validate();
    return detail::run_per_word(lex, ev, jobs, [&](const CandidateSet& cs, const EvidenceMatrix& m) {
        auto prepared = detail::prepare(cs, m, cfg.top_k);
        PpSelection sel = pp_select(prepared.matrix, pp_threshold, em_options(cfg));
        CandidateSet out(cs.word());
        std::vector<double> probs;
        double total = 0.0;
        for (std::size_t c : sel.kept) total += sel.theta_star.theta[c];
        for (std::size_t c : sel.kept) {
            out.add(Pronunciation(prepared.matrix.candidates()[c], prepared.sources[c]));
            probs.push_back(sel.theta_star.theta[c] / total);
        }
        return std::make_pair(detail::with_probs(std::move(out), std::move(probs)), std::string());
    });
}

/// First G2P candidate plus reference candidates, uniform probabilities.
inline LexiconRun g2p_one_best_lexicon(const Lexicon& lex) {
    LexiconRun run;
    Lexicon best = g2p_one_best(lex);
    for (auto& [w, cs] : best.entries) {
        ++run.counts.words;
        run.counts.candidates_in += lex.find(w)->size();
        run.counts.candidates_out += cs.size();
        run.lexicon.entries.emplace(w, detail::uniform_probs(std::move(cs)));
    }
    return run;
}

/// Combined lexicon from G2P, reference and phonetic-decoding alignment counts.
inline Lexicon merge_sources(const Lexicon& g2p, const Lexicon& ref, const std::map<std::string, AlignmentCounts>& pd,
                             double rel_freq_threshold) {
    std::vector<std::pair<std::string, Pronunciation>> pd_cands;
    for (const auto& [word, counts] : pd)
        for (auto& p : filter_by_relative_frequency(counts, rel_freq_threshold)) pd_cands.emplace_back(word, std::move(p));
    return merge_candidates(g2p, pd_cands, ref);
}

/// Reproducibility record written next to every output as `<out>.manifest`.
struct RunManifest {
    std::string command;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::pair<std::string, std::string>> inputs;
    std::vector<std::pair<std::string, std::string>> outputs;
    double wall_seconds = 0.0;
    RunCounts counts;

    std::string to_text() const {
        std::ostringstream out;
        out << "command=" << command << '\n';
        for (const auto& [k, v] : config) out << "config." << k << '=' << v << '\n';
        for (const auto& [k, v] : inputs) out << "input." << k << '=' << v << '\n';
        for (const auto& [k, v] : outputs) out << "output." << k << '=' << v << '\n';
        out << "words=" << counts.words << '\n'
            << "words_selected=" << counts.words_selected << '\n'
            << "words_bypassed=" << counts.words_bypassed << '\n'
            << "candidates_in=" << counts.candidates_in << '\n'
            << "candidates_out=" << counts.candidates_out << '\n';
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f", wall_seconds);
        out << "wall_seconds=" << buf << '\n';
        return out.str();
    }
};

}  // namespace lexlearn

#endif  // LEXLEARN_PIPELINE_HPP
