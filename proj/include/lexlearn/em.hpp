#ifndef LEXLEARN_EM_HPP
#define LEXLEARN_EM_HPP

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lexlearn/evidence.hpp"

namespace lexlearn {

/// Pronunciation model theta_w: a distribution over the columns of an evidence matrix.
struct PronModel {
    std::string word;
    std::vector<double> theta;

    static PronModel uniform(std::string word, std::size_t n) {
        return {std::move(word), std::vector<double>(n, 1.0 / static_cast<double>(n))};
    }

    std::size_t size() const { return theta.size(); }

    void validate(double tol = 1e-9) const {
        double sum = 0.0;
        for (double t : theta) {
            if (!(t >= 0.0)) throw Error("word '" + word + "': negative pronunciation probability");
            sum += t;
        }
        if (std::fabs(sum - 1.0) > tol) throw Error("word '" + word + "': pronunciation probabilities do not sum to 1");
    }
};

struct EmOptions {
    int max_iters = 200;
    double tol = 1e-10;
};

struct EMResult {
    PronModel theta_star;
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

/// sum_u log(sum_{j} tau(u, cols[j]) * theta[j])
inline double log_likelihood_on(const EvidenceMatrix& ev, std::span<const std::size_t> cols,
                                std::span<const double> theta) {
    double total = 0.0;
    for (std::size_t r = 0; r < ev.rows(); ++r) {
        double mix = 0.0;
        for (std::size_t j = 0; j < cols.size(); ++j) mix += ev(r, cols[j]) * theta[j];
        total += std::log(mix);
    }
    return total;
}

struct NoObserver {
    void operator()(int, const std::vector<double>&, double) const {}
};

/// EM over a subset of columns. `theta` is updated in place; the observer sees
/// (iteration, theta, likelihood) after every M-step, iteration 0 being the start.
template <typename Observer = NoObserver>
EMResult em_on(const EvidenceMatrix& ev, std::span<const std::size_t> cols, std::vector<double> theta,
               const EmOptions& opts, Observer&& observe = {}) {
    const std::size_t k = cols.size();
    std::vector<double> counts(k);
    std::vector<double> weighted(k);

    double prev = log_likelihood_on(ev, cols, theta);
    observe(0, theta, prev);

    EMResult result;
    for (int it = 1; it <= opts.max_iters; ++it) {
        // E-step: lambda(u, b) = tau(u, b) theta_b / sum_b' tau(u, b') theta_b'
        std::fill(counts.begin(), counts.end(), 0.0);
        for (std::size_t r = 0; r < ev.rows(); ++r) {
            double norm = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                weighted[j] = ev(r, cols[j]) * theta[j];
                norm += weighted[j];
            }
            for (std::size_t j = 0; j < k; ++j) counts[j] += weighted[j] / norm;
        }
        // M-step: theta_b = sum_u lambda(u, b) / sum_u sum_b lambda(u, b)
        double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        for (std::size_t j = 0; j < k; ++j) theta[j] = counts[j] / total;

        double cur = log_likelihood_on(ev, cols, theta);
        observe(it, theta, cur);
        result.iterations = it;
        bool done = std::fabs(cur - prev) < opts.tol;
        prev = cur;
        if (done) {
            result.converged = true;
            break;
        }
    }
    result.log_likelihood = prev;
    result.theta_star = PronModel{ev.word(), std::move(theta)};
    return result;
}

inline std::vector<std::size_t> all_columns(const EvidenceMatrix& ev) {
    std::vector<std::size_t> cols(ev.cols());
    std::iota(cols.begin(), cols.end(), 0);
    return cols;
}

}  // namespace detail

/// Data log-likelihood sum_u log(sum_b tau(u, b) theta_b) over every row of `ev`.
inline double log_likelihood(const EvidenceMatrix& ev, const PronModel& theta) {
    if (theta.size() != ev.cols())
        throw Error("word '" + ev.word() + "': model has " + std::to_string(theta.size()) + " components, evidence has " +
                    std::to_string(ev.cols()) + " columns");
    auto cols = detail::all_columns(ev);
    return detail::log_likelihood_on(ev, cols, theta.theta);
}

/// Maximizes the data likelihood over theta by EM, starting from `theta0`.
/// Stops once the likelihood moves by less than `opts.tol` or after
/// `opts.max_iters` iterations. A zero component in `theta0` is rejected since
/// EM can never move it off zero.
template <typename Observer = detail::NoObserver>
EMResult run_em(const EvidenceMatrix& ev, const PronModel& theta0, const EmOptions& opts = {},
                Observer&& observe = {}) {
    if (theta0.size() != ev.cols())
        throw Error("word '" + ev.word() + "': initial model has " + std::to_string(theta0.size()) +
                    " components, evidence has " + std::to_string(ev.cols()) + " columns");
    for (double t : theta0.theta)
        if (!(t > 0.0)) throw Error("word '" + ev.word() + "': initial model has a non-positive component");
    if (opts.max_iters < 1 || !(opts.tol > 0.0)) throw Error("EM needs max_iters >= 1 and tol > 0");
    auto cols = detail::all_columns(ev);
    return detail::em_on(ev, cols, theta0.theta, opts, std::forward<Observer>(observe));
}

/// EM from the uniform model.
inline EMResult run_em_uniform(const EvidenceMatrix& ev, const EmOptions& opts = {}) {
    return run_em(ev, PronModel::uniform(ev.word(), ev.cols()), opts);
}

}  // namespace lexlearn

#endif  // LEXLEARN_EM_HPP
