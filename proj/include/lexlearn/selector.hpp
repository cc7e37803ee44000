#ifndef LEXLEARN_SELECTOR_HPP
#define LEXLEARN_SELECTOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "lexlearn/em.hpp"

namespace lexlearn {

inline EmOptions em_options(const SelectionConfig& cfg) { return {cfg.em_max_iters, cfg.em_tol}; }

/// Pruning statistics of one candidate within the current set.
struct CandidateScore {
    Pronunciation candidate;
    double delta_L = 0.0;          ///< L* - L*_b, total over utterances
    double per_utt_delta_L = 0.0;  ///< (L* - L*_b) / M_w
    double score = 0.0;            ///< q_b; negative means prunable
};

struct RemovalStep {
    CandidateScore removed;
    std::size_t remaining = 0;  ///< set size after the removal
};

struct SelectionTrace {
    std::string word;
    std::vector<RemovalStep> steps;
    CandidateSet final_set;
    PronModel final_theta;
    /// Scores of the survivors at termination, aligned with final_set.
    std::vector<CandidateScore> final_scores;
    /// Set when removals drove the set down to one candidate; that candidate is
    /// kept regardless of how it would score.
    bool guard_triggered = false;
    /// Columns of the input matrix that survived, in input order.
    std::vector<std::size_t> kept_columns;
};

/// Threshold T_s = -alpha_s log(delta) on the per-utterance reduction.
inline double threshold(Source s, const SelectionConfig& cfg) { return -cfg.alpha[s] * std::log(cfg.delta); }

/// q_b = max(dL, 0) / (M_w + beta_s) + alpha_s log(delta).
///
/// Negative reductions only come from EM convergence noise, so they are
/// clamped; this keeps alpha_s log(delta) an exact lower bound.
inline double score(double delta_L, std::size_t num_utts, Source source, const SelectionConfig& cfg) {
    if (num_utts < 1) throw Error("score needs at least one utterance");
    double dl = std::max(delta_L, 0.0);
    return dl / (static_cast<double>(num_utts) + cfg.beta[source]) + cfg.alpha[source] * std::log(cfg.delta);
}

/// L* on the full set minus L* with column `b` removed, both from uniform starts.
inline double likelihood_reduction(const EvidenceMatrix& ev, std::size_t b, const EmOptions& opts = {}) {
    if (ev.cols() < 2) throw Error("word '" + ev.word() + "': cannot remove the only candidate");
    if (b >= ev.cols()) throw Error("word '" + ev.word() + "': candidate index out of range");
    auto full = detail::all_columns(ev);
    std::vector<std::size_t> rest;
    for (std::size_t c : full)
        if (c != b) rest.push_back(c);
    double l_full = detail::em_on(ev, full, std::vector<double>(full.size(), 1.0 / full.size()), opts).log_likelihood;
    double l_rest = detail::em_on(ev, rest, std::vector<double>(rest.size(), 1.0 / rest.size()), opts).log_likelihood;
    return l_full - l_rest;
}

/// Greedy backward elimination: re-fit EM on the current set, score every
/// candidate by the likelihood lost when it alone is dropped, remove the
/// lowest-scoring one if its score is negative, and repeat. Ties go to the
/// lexicographically smaller baseform. A word is never left without a
/// pronunciation.
inline SelectionTrace greedy_select(const EvidenceMatrix& ev, const std::vector<Source>& sources,
                                    const SelectionConfig& cfg) {
    if (sources.size() != ev.cols())
        throw Error("word '" + ev.word() + "': " + std::to_string(sources.size()) + " sources for " +
                    std::to_string(ev.cols()) + " candidates");
    const EmOptions opts = em_options(cfg);
    const std::size_t num_utts = ev.rows();
    const double inf = std::numeric_limits<double>::infinity();

    auto uniform = [](std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); };
    auto pron = [&](std::size_t c) { return Pronunciation(ev.candidates()[c], sources[c]); };

    SelectionTrace trace;
    trace.word = ev.word();
    std::vector<std::size_t> active = detail::all_columns(ev);
    EMResult fit;
    std::vector<CandidateScore> scores;

    while (true) {
        fit = detail::em_on(ev, active, uniform(active.size()), opts);
        scores.clear();
        if (active.size() == 1) {
            // Dropping the last candidate would send the likelihood to -inf.
            scores.push_back({pron(active[0]), inf, inf, inf});
            trace.guard_triggered = !trace.steps.empty();
            break;
        }

        std::size_t worst = 0;
        std::vector<std::size_t> rest(active.size() - 1);
        for (std::size_t i = 0; i < active.size(); ++i) {
            std::copy(active.begin(), active.begin() + i, rest.begin());
            std::copy(active.begin() + i + 1, active.end(), rest.begin() + i);
            double l_rest = detail::em_on(ev, rest, uniform(rest.size()), opts).log_likelihood;
            double dl = fit.log_likelihood - l_rest;
            Source s = sources[active[i]];
            scores.push_back({pron(active[i]), dl, dl / num_utts, score(dl, num_utts, s, cfg)});
            if (i > 0) {
                const auto& a = scores[i];
                const auto& w = scores[worst];
                if (a.score < w.score || (a.score == w.score && a.candidate.phones < w.candidate.phones)) worst = i;
            }
        }

        if (scores[worst].score >= 0.0) break;

        active.erase(active.begin() + static_cast<std::ptrdiff_t>(worst));
        trace.steps.push_back({scores[worst], active.size()});
    }

    trace.kept_columns = active;
    trace.final_set = CandidateSet(ev.word());
    for (std::size_t c : active) trace.final_set.add(pron(c));
    trace.final_theta = std::move(fit.theta_star);
    trace.final_scores = std::move(scores);
    return trace;
}

namespace detail {

inline std::string format_score(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace detail

/// One `word TAB REMOVED|KEPT TAB score TAB phones` line per removal (in order)
/// and per survivor. The sole survivor of a word reports score `inf`.
inline std::string format_trace(const SelectionTrace& t) {
    std::ostringstream out;
    for (const auto& step : t.steps)
        out << t.word << "\tREMOVED\t" << detail::format_score(step.removed.score) << '\t'
            << to_string(step.removed.candidate.phones) << '\n';
    for (const auto& s : t.final_scores)
        out << t.word << "\tKEPT\t" << detail::format_score(s.score) << '\t' << to_string(s.candidate.phones) << '\n';
    return out.str();
}

}  // namespace lexlearn

#endif  // LEXLEARN_SELECTOR_HPP
