#ifndef LEXLEARN_BASELINES_HPP
#define LEXLEARN_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "lexlearn/selector.hpp"

namespace lexlearn {

struct PpSelection {
    std::vector<std::size_t> kept;  ///< surviving columns, input order
    PronModel theta_star;           ///< EM fit on the full set
    std::vector<double> normalized; ///< theta_star / max(theta_star)
};

/// Pronunciation-probability pruning: one EM fit on the full set, then keep the
/// candidates whose probability relative to the most likely one is at least
/// `threshold`. The argmax always survives.
inline PpSelection pp_select(const EvidenceMatrix& ev, double threshold, const EmOptions& opts = {}) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw Error("pp threshold must lie in (0,1]");
    PpSelection out;
    out.theta_star = run_em_uniform(ev, opts).theta_star;
    const auto& theta = out.theta_star.theta;
    std::size_t best = static_cast<std::size_t>(std::max_element(theta.begin(), theta.end()) - theta.begin());
    for (std::size_t c = 0; c < theta.size(); ++c) {
        double norm = theta[c] / theta[best];
        out.normalized.push_back(c == best ? 1.0 : norm);
        if (c == best || norm >= threshold) out.kept.push_back(c);
    }
    return out;
}

/// The top-ranked G2P candidate per word plus every reference candidate.
/// Input order is taken as G2P rank.
inline Lexicon g2p_one_best(const Lexicon& lex) {
    Lexicon out;
    for (const auto& [word, cs] : lex.entries) {
        CandidateSet kept(word);
        bool have_g2p = false;
        for (const auto& p : cs.candidates()) {
            if (p.source == Source::Reference) {
                kept.add(p);
            } else if (p.source == Source::G2P && !have_g2p) {
                kept.add(p);
                have_g2p = true;
            }
        }
        if (kept.empty()) throw Error("word '" + word + "' has neither a G2P nor a reference candidate");
        out.entries.emplace(word, std::move(kept));
    }
    return out;
}

namespace oracle {

/// Column-major copy of the evidence, so nothing is shared with the EM in em.hpp.
struct Columns {
    std::vector<std::vector<double>> col;  // col[b][u]
    std::size_t rows = 0;

    explicit Columns(const EvidenceMatrix& ev) : col(ev.cols(), std::vector<double>(ev.rows())), rows(ev.rows()) {
        for (std::size_t u = 0; u < ev.rows(); ++u)
            for (std::size_t b = 0; b < ev.cols(); ++b) col[b][u] = ev(u, b);
    }
};

struct Fit {
    double log_likelihood = 0.0;
    std::vector<double> theta;
    bool converged = false;
};

/// Multiplicative-update form of EM: theta_b <- theta_b * mean_u(tau_ub / mix_u),
/// renormalized. Same stopping rule as the production EM.
inline Fit em(const Columns& data, const std::vector<std::size_t>& subset, const EmOptions& opts) {
    const std::size_t k = subset.size();
    std::vector<double> theta(k, 1.0 / static_cast<double>(k));
    std::vector<double> mix(data.rows);

    auto evaluate = [&]() {
        std::fill(mix.begin(), mix.end(), 0.0);
        for (std::size_t j = 0; j < k; ++j) {
            const auto& c = data.col[subset[j]];
            for (std::size_t u = 0; u < data.rows; ++u) mix[u] += c[u] * theta[j];
        }
        double l = 0.0;
        for (double m : mix) l += std::log(m);
        return l;
    };

    double prev = evaluate();
    for (int it = 0; it < opts.max_iters; ++it) {
        std::vector<double> next(k);
        double norm = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const auto& c = data.col[subset[j]];
            double ratio = 0.0;
            for (std::size_t u = 0; u < data.rows; ++u) ratio += c[u] / mix[u];
            next[j] = theta[j] * ratio;
            norm += next[j];
        }
        for (std::size_t j = 0; j < k; ++j) theta[j] = next[j] / norm;
        double cur = evaluate();
        bool done = std::fabs(cur - prev) < opts.tol;
        prev = cur;
        if (done) return {prev, theta, true};
    }
    return {prev, theta, false};
}

/// max over t in [0,1] of sum_u log(t a_u + (1-t) b_u): a 0.001 grid followed by
/// ternary search on the bracket around the best grid point (the objective is
/// concave in t).
inline double grid_max_2(const std::vector<double>& a, const std::vector<double>& b) {
    auto f = [&](double t) {
        double l = 0.0;
        for (std::size_t u = 0; u < a.size(); ++u) l += std::log(t * a[u] + (1.0 - t) * b[u]);
        return l;
    };
    int best = 0;
    double best_val = f(0.0);
    for (int i = 1; i <= 1000; ++i) {
        double v = f(i / 1000.0);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    double lo = std::max(0, best - 1) / 1000.0;
    double hi = std::min(1000, best + 1) / 1000.0;
    for (int i = 0; i < 200; ++i) {
        double m1 = lo + (hi - lo) / 3.0;
        double m2 = hi - (hi - lo) / 3.0;
        if (f(m1) < f(m2))
            lo = m1;
        else
            hi = m2;
    }
    return std::max(best_val, f(0.5 * (lo + hi)));
}

}  // namespace oracle

inline constexpr std::size_t kBruteForceMaxCandidates = 12;

/// Independent re-implementation of the greedy selector, for cross-checking.
/// Every subset likelihood is recomputed with its own EM (memoized per subset);
/// two-candidate fits are also checked against a 1-D search.
inline SelectionTrace brute_force_select(const EvidenceMatrix& ev, const std::vector<Source>& sources,
                                         const SelectionConfig& cfg) {
    const std::size_t n = ev.cols();
    if (n > kBruteForceMaxCandidates)
        throw Error("brute-force oracle handles at most " + std::to_string(kBruteForceMaxCandidates) +
                    " candidates, got " + std::to_string(n));
    if (sources.size() != n) throw Error("brute-force oracle: sources/candidates size mismatch");

    const oracle::Columns data(ev);
    const EmOptions opts = em_options(cfg);
    const double m = static_cast<double>(ev.rows());
    std::map<std::uint32_t, oracle::Fit> memo;

    auto members = [&](std::uint32_t mask) {
        std::vector<std::size_t> out;
        for (std::size_t c = 0; c < n; ++c)
            if (mask & (1u << c)) out.push_back(c);
        return out;
    };
    auto fit = [&](std::uint32_t mask) -> const oracle::Fit& {
        auto it = memo.find(mask);
        if (it != memo.end()) return it->second;
        auto subset = members(mask);
        oracle::Fit f = oracle::em(data, subset, opts);
        if (subset.size() == 2 && f.converged) {
            double best = oracle::grid_max_2(data.col[subset[0]], data.col[subset[1]]);
            if (f.log_likelihood < best - 1e-4)
                throw Error("brute-force oracle: EM fit " + std::to_string(f.log_likelihood) +
                            " falls short of 1-D search maximum " + std::to_string(best));
        }
        return memo.emplace(mask, std::move(f)).first->second;
    };
    auto q = [&](double dl, Source s) {
        return (dl > 0.0 ? dl : 0.0) / (m + cfg.beta[s]) + cfg.alpha[s] * std::log(cfg.delta);
    };

    SelectionTrace trace;
    trace.word = ev.word();
    std::uint32_t mask = (1u << n) - 1u;
    while (true) {
        auto set = members(mask);
        double l_all = fit(mask).log_likelihood;
        std::vector<CandidateScore> scores;
        if (set.size() == 1) {
            double inf = std::numeric_limits<double>::infinity();
            scores.push_back({Pronunciation(ev.candidates()[set[0]], sources[set[0]]), inf, inf, inf});
            trace.guard_triggered = !trace.steps.empty();
            trace.final_scores = scores;
            break;
        }
        for (std::size_t c : set) {
            double dl = l_all - fit(mask & ~(1u << c)).log_likelihood;
            scores.push_back({Pronunciation(ev.candidates()[c], sources[c]), dl, dl / m, q(dl, sources[c])});
        }
        std::size_t arg = 0;
        for (std::size_t i = 1; i < scores.size(); ++i) {
            bool lower = scores[i].score < scores[arg].score;
            bool tie_smaller = scores[i].score == scores[arg].score &&
                               scores[i].candidate.phones < scores[arg].candidate.phones;
            if (lower || tie_smaller) arg = i;
        }
        if (!(scores[arg].score < 0.0)) {
            trace.final_scores = scores;
            break;
        }
        mask &= ~(1u << set[arg]);
        trace.steps.push_back({scores[arg], set.size() - 1});
    }

    trace.kept_columns = members(mask);
    trace.final_set = CandidateSet(ev.word());
    for (std::size_t c : trace.kept_columns) trace.final_set.add(Pronunciation(ev.candidates()[c], sources[c]));
    trace.final_theta = PronModel{ev.word(), fit(mask).theta};
    return trace;
}

}  // namespace lexlearn

#endif  // LEXLEARN_BASELINES_HPP
