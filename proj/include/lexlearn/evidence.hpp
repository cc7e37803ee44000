#ifndef LEXLEARN_EVIDENCE_HPP
#define LEXLEARN_EVIDENCE_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lexlearn/lexicon.hpp"

namespace lexlearn {

/// Per-word table of floored conditional likelihoods tau(u, b): one row per
/// utterance containing the word, one column per candidate baseform.
///
/// Lattice posteriors collected under uniform pronunciation priors are used
/// directly as likelihoods; rows are never renormalized.
class EvidenceMatrix {
public:
    EvidenceMatrix() = default;

    /// `tau` is row-major, rows x columns. Entries below `delta` are raised to it.
    EvidenceMatrix(std::string word, std::vector<std::string> utterance_ids, std::vector<Baseform> candidates,
                   std::vector<double> tau, double delta)
        : word_(std::move(word)),
          utterance_ids_(std::move(utterance_ids)),
          candidates_(std::move(candidates)),
          tau_(std::move(tau)),
          delta_(delta) {
        if (!(delta_ > 0.0 && delta_ < 1.0)) throw Error("delta must lie in (0,1)");
        if (utterance_ids_.empty()) throw Error("word '" + word_ + "': evidence needs at least one utterance");
        if (candidates_.empty()) throw Error("word '" + word_ + "': evidence needs at least one candidate");
        if (tau_.size() != utterance_ids_.size() * candidates_.size())
            throw Error("word '" + word_ + "': evidence matrix has wrong number of cells");
        {
            auto ids = utterance_ids_;
            std::sort(ids.begin(), ids.end());
            if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
                throw Error("word '" + word_ + "': duplicate utterance id in evidence");
        }
        for (double& v : tau_) {
            if (!(v <= 1.0) || std::isnan(v)) throw Error("word '" + word_ + "': likelihood above 1 or NaN");
            v = std::max(v, delta_);
        }
    }

    const std::string& word() const { return word_; }
    const std::vector<std::string>& utterance_ids() const { return utterance_ids_; }
    const std::vector<Baseform>& candidates() const { return candidates_; }
    std::size_t rows() const { return utterance_ids_.size(); }
    std::size_t cols() const { return candidates_.size(); }
    double delta() const { return delta_; }

    double operator()(std::size_t row, std::size_t col) const { return tau_[row * cols() + col]; }
    const std::vector<double>& values() const { return tau_; }

    std::optional<std::size_t> column_of(const Baseform& b) const {
        for (std::size_t c = 0; c < candidates_.size(); ++c)
            if (candidates_[c] == b) return c;
        return std::nullopt;
    }

    /// Copy restricted to the given columns, in the given order.
    EvidenceMatrix select_columns(const std::vector<std::size_t>& cols_keep) const {
        std::vector<Baseform> cands;
        for (std::size_t c : cols_keep) cands.push_back(candidates_.at(c));
        std::vector<double> tau;
        tau.reserve(rows() * cols_keep.size());
        for (std::size_t r = 0; r < rows(); ++r)
            for (std::size_t c : cols_keep) tau.push_back((*this)(r, c));
        return EvidenceMatrix(word_, utterance_ids_, std::move(cands), std::move(tau), delta_);
    }

    /// Re-lays the columns in the order of `cs`. Candidates without any evidence
    /// become all-delta columns; a baseform unknown to `cs` is an error.
    EvidenceMatrix align_to(const CandidateSet& cs) const {
        for (const auto& b : candidates_)
            if (!cs.find(b))
                throw Error("word '" + word_ + "': evidence baseform '" + to_string(b) +
                            "' is not among the word's candidates");
        std::vector<Baseform> cands;
        for (const auto& p : cs.candidates()) cands.push_back(p.phones);
        std::vector<double> tau(rows() * cands.size(), delta_);
        for (std::size_t c = 0; c < cands.size(); ++c) {
            auto src = column_of(cands[c]);
            if (!src) continue;
            for (std::size_t r = 0; r < rows(); ++r) tau[r * cands.size() + c] = (*this)(r, *src);
        }
        return EvidenceMatrix(word_, utterance_ids_, std::move(cands), std::move(tau), delta_);
    }

    friend bool operator==(const EvidenceMatrix&, const EvidenceMatrix&) = default;

private:
    std::string word_;
    std::vector<std::string> utterance_ids_;
    std::vector<Baseform> candidates_;
    std::vector<double> tau_;
    double delta_ = 1e-5;
};

using EvidenceMap = std::map<std::string, EvidenceMatrix>;

/// Reads `utterance_id TAB word TAB posterior TAB phones` lines. Rows and columns
/// appear in first-seen order; absent cells are set to `delta`.
inline EvidenceMap load_evidence(std::string_view text, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw Error("delta must lie in (0,1)");

    struct Builder {
        std::vector<std::string> utts;
        std::map<std::string, std::size_t> utt_index;
        std::vector<Baseform> cands;
        std::map<Baseform, std::size_t> cand_index;
        std::map<std::pair<std::size_t, std::size_t>, double> cells;
    };
    std::map<std::string, Builder> builders;

    detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        std::string where = "line " + std::to_string(line_no);
        auto fields = detail::split(line, '\t');
        if (fields.size() != 4)
            throw Error(where + ": expected 4 tab-separated fields, got " + std::to_string(fields.size()));
        std::string utt(fields[0]);
        std::string word(fields[1]);
        if (utt.empty() || word.empty()) throw Error(where + ": empty utterance id or word");
        double post = detail::parse_double(fields[2], where);
        if (!(post >= 0.0 && post <= 1.0)) throw Error(where + ": posterior " + std::string(fields[2]) + " outside [0,1]");
        Baseform phones;
        try {
            phones = parse_baseform(fields[3]);
        } catch (const Error& e) {
            throw Error(where + ": " + e.what());
        }

        Builder& b = builders[word];
        auto [uit, unew] = b.utt_index.try_emplace(utt, b.utts.size());
        if (unew) b.utts.push_back(utt);
        auto [cit, cnew] = b.cand_index.try_emplace(phones, b.cands.size());
        if (cnew) b.cands.push_back(phones);
        if (!b.cells.emplace(std::make_pair(uit->second, cit->second), post).second)
            throw Error(where + ": duplicate evidence for utterance '" + utt + "', word '" + word + "', baseform '" +
                        to_string(phones) + "'");
    });

    EvidenceMap out;
    for (auto& [word, b] : builders) {
        std::size_t ncols = b.cands.size();
        std::vector<double> tau(b.utts.size() * ncols, delta);
        for (const auto& [rc, v] : b.cells) tau[rc.first * ncols + rc.second] = v;
        out.emplace(word, EvidenceMatrix(word, std::move(b.utts), std::move(b.cands), std::move(tau), delta));
    }
    return out;
}

/// Writes every cell of every matrix, words in byte order. Inverse of load_evidence
/// up to the printed precision.
inline std::string serialize_evidence(const EvidenceMap& ev) {
    std::ostringstream out;
    char buf[64];
    for (const auto& [word, m] : ev) {
        for (std::size_t r = 0; r < m.rows(); ++r) {
            for (std::size_t c = 0; c < m.cols(); ++c) {
                std::snprintf(buf, sizeof buf, "%.10g", m(r, c));
                out << m.utterance_ids()[r] << '\t' << word << '\t' << buf << '\t' << to_string(m.candidates()[c])
                    << '\n';
            }
        }
    }
    return out.str();
}

/// Mean of each column over the word's utterances.
inline std::vector<double> average_posteriors(const EvidenceMatrix& ev) {
    std::vector<double> avg(ev.cols(), 0.0);
    for (std::size_t r = 0; r < ev.rows(); ++r)
        for (std::size_t c = 0; c < ev.cols(); ++c) avg[c] += ev(r, c);
    for (double& a : avg) a /= static_cast<double>(ev.rows());
    return avg;
}

/// Indices of the columns that survive top-k pruning, in original order.
inline std::vector<std::size_t> top_k_columns(const EvidenceMatrix& ev, int k) {
    if (k < 1) throw Error("top-k needs k >= 1");
    std::vector<std::size_t> order(ev.cols());
    std::iota(order.begin(), order.end(), 0);
    if (order.size() <= static_cast<std::size_t>(k)) return order;
    auto avg = average_posteriors(ev);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (avg[a] != avg[b]) return avg[a] > avg[b];
        return ev.candidates()[a] < ev.candidates()[b];
    });
    order.resize(static_cast<std::size_t>(k));
    std::sort(order.begin(), order.end());
    return order;
}

/// Keeps the k candidates with the highest average posterior.
inline EvidenceMatrix prune_top_k(const EvidenceMatrix& ev, int k) {
    return ev.select_columns(top_k_columns(ev, k));
}

/// Occurrence counts of the phone sequences that phonetic decoding aligned to
/// one word's tokens.
struct AlignmentCounts {
    std::string word;
    std::map<Baseform, long long> counts;
};

/// Reads `word TAB count TAB phones`; repeated (word, phones) lines accumulate.
inline std::map<std::string, AlignmentCounts> parse_alignment_counts(std::string_view text) {
    std::map<std::string, AlignmentCounts> out;
    detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        std::string where = "line " + std::to_string(line_no);
        auto fields = detail::split(line, '\t');
        if (fields.size() != 3)
            throw Error(where + ": expected 3 tab-separated fields, got " + std::to_string(fields.size()));
        std::string word(fields[0]);
        if (word.empty()) throw Error(where + ": empty word");
        long long n = detail::parse_int(fields[1], where);
        if (n < 0) throw Error(where + ": negative count");
        Baseform phones;
        try {
            phones = parse_baseform(fields[2]);
        } catch (const Error& e) {
            throw Error(where + ": " + e.what());
        }
        auto& ac = out[word];
        ac.word = word;
        ac.counts[phones] += n;
    });
    return out;
}

/// Phonetic-decoding candidates whose count relative to the most frequent
/// sequence is at least `threshold`. Most frequent first, ties by phones.
inline std::vector<Pronunciation> filter_by_relative_frequency(const AlignmentCounts& counts, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw Error("relative-frequency threshold must lie in (0,1)");
    long long max_count = 0;
    for (const auto& [b, n] : counts.counts) max_count = std::max(max_count, n);
    if (max_count <= 0) throw Error("word '" + counts.word + "': all alignment counts are zero");

    std::vector<std::pair<const Baseform*, long long>> kept;
    for (const auto& [b, n] : counts.counts) {
        double ratio = static_cast<double>(n) / static_cast<double>(max_count);
        if (ratio >= threshold) kept.emplace_back(&b, n);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return *x.first < *y.first;
    });
    std::vector<Pronunciation> out;
    for (const auto& [b, n] : kept) out.emplace_back(*b, Source::PhoneticDecoding);
    return out;
}

/// Combined lexicon: per-word union by phone sequence. Candidates are laid out
/// reference first, then G2P (rank order kept), then phonetic decoding; a
/// baseform seen from several sources keeps the highest-priority tag
/// (ref > g2p > pd). Probabilities are dropped.
inline Lexicon merge_candidates(const Lexicon& g2p, const std::vector<std::pair<std::string, Pronunciation>>& pd,
                                const Lexicon& ref) {
    std::map<std::string, std::vector<Pronunciation>> pooled;
    for (const auto& [w, cs] : ref.entries)
        for (const auto& p : cs.candidates()) pooled[w].push_back(p);
    for (const auto& [w, cs] : g2p.entries)
        for (const auto& p : cs.candidates()) pooled[w].push_back(p);
    for (const auto& [w, p] : pd) pooled[w].push_back(p);

    Lexicon out;
    for (auto& [w, list] : pooled) {
        std::stable_sort(list.begin(), list.end(), [](const Pronunciation& a, const Pronunciation& b) {
            return source_priority(a.source) > source_priority(b.source);
        });
        CandidateSet& cs = out.entry(w);
        for (auto& p : list) cs.add(std::move(p));
    }
    return out;
}

}  // namespace lexlearn

#endif  // LEXLEARN_EVIDENCE_HPP
