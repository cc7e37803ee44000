#ifndef LEXLEARN_LEXICON_HPP
#define LEXLEARN_LEXICON_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lexlearn {

/// All recoverable failures (bad input, violated preconditions) surface as this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t j = i;
        while (j < s.size() && !is_space(s[j])) ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

inline bool blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(), is_space);
}

/// Iterates `\n`-separated lines, skipping blank ones; `fn(line_number, line)`.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        std::string_view line = strip_cr(text.substr(start, end - start));
        if (!blank(line)) fn(line_no, line);
        if (end == text.size()) break;
        start = end + 1;
    }
}

inline double parse_double(std::string_view token, const std::string& where) {
    std::string s(token);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw Error(where + ": not a number: '" + s + "'");
    }
    if (used != s.size()) throw Error(where + ": not a number: '" + s + "'");
    return v;
}

inline long long parse_int(std::string_view token, const std::string& where) {
    std::string s(token);
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        throw Error(where + ": not an integer: '" + s + "'");
    }
    if (used != s.size()) throw Error(where + ": not an integer: '" + s + "'");
    return v;
}

inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace detail

/// A single phone symbol: non-empty, no whitespace.
class Phone {
public:
    Phone() = default;
    explicit Phone(std::string symbol) : symbol_(std::move(symbol)) {
        if (symbol_.empty()) throw Error("empty phone symbol");
        if (std::any_of(symbol_.begin(), symbol_.end(), detail::is_space))
            throw Error("phone symbol contains whitespace: '" + symbol_ + "'");
    }

    const std::string& symbol() const { return symbol_; }

    friend bool operator==(const Phone&, const Phone&) = default;
    friend auto operator<=>(const Phone&, const Phone&) = default;

private:
    std::string symbol_;
};

/// Ordered phone sequence. Lexicographic comparison is the tie-break order used
/// throughout the library.
using Baseform = std::vector<Phone>;

inline Baseform parse_baseform(std::string_view text) {
    Baseform out;
    for (auto tok : detail::split_ws(text)) out.emplace_back(std::string(tok));
    if (out.empty()) throw Error("empty phone sequence");
    return out;
}

inline std::string to_string(const Baseform& b) {
    std::string out;
    for (const auto& p : b) {
        if (!out.empty()) out += ' ';
        out += p.symbol();
    }
    return out;
}

enum class Source { G2P = 0, PhoneticDecoding = 1, Reference = 2 };

inline constexpr std::array<Source, 3> kAllSources = {Source::G2P, Source::PhoneticDecoding,
                                                      Source::Reference};

inline std::string_view to_tag(Source s) {
    switch (s) {
        case Source::G2P: return "g2p";
        case Source::PhoneticDecoding: return "pd";
        case Source::Reference: return "ref";
    }
    return "?";
}

inline std::optional<Source> source_from_tag(std::string_view tag) {
    if (tag == "g2p") return Source::G2P;
    if (tag == "pd") return Source::PhoneticDecoding;
    if (tag == "ref") return Source::Reference;
    return std::nullopt;
}

/// Merge priority when the same baseform arrives from several sources.
inline int source_priority(Source s) {
    switch (s) {
        case Source::Reference: return 2;
        case Source::G2P: return 1;
        case Source::PhoneticDecoding: return 0;
    }
    return -1;
}

/// Per-source scalar table (alpha, beta).
template <typename T>
struct PerSource {
    std::array<T, 3> values{};

    T& operator[](Source s) { return values[static_cast<std::size_t>(s)]; }
    const T& operator[](Source s) const { return values[static_cast<std::size_t>(s)]; }

    friend bool operator==(const PerSource&, const PerSource&) = default;
};

/// A candidate baseform and where it came from. Set membership compares phones only.
struct Pronunciation {
    Baseform phones;
    Source source = Source::G2P;

    Pronunciation() = default;
    Pronunciation(Baseform p, Source s) : phones(std::move(p)), source(s) {
        if (phones.empty()) throw Error("pronunciation with no phones");
    }

    bool same_phones(const Pronunciation& other) const { return phones == other.phones; }

    friend bool operator==(const Pronunciation&, const Pronunciation&) = default;
};

/// The candidate set B of one word, in stored order, optionally carrying a
/// probability per candidate.
class CandidateSet {
public:
    CandidateSet() = default;
    explicit CandidateSet(std::string word) : word_(std::move(word)) {}

    const std::string& word() const { return word_; }
    const std::vector<Pronunciation>& candidates() const { return candidates_; }
    std::size_t size() const { return candidates_.size(); }
    bool empty() const { return candidates_.empty(); }
    const Pronunciation& operator[](std::size_t i) const { return candidates_[i]; }

    bool has_probs() const { return !probs_.empty(); }
    const std::vector<double>& probs() const { return probs_; }

    std::optional<std::size_t> find(const Baseform& phones) const {
        for (std::size_t i = 0; i < candidates_.size(); ++i)
            if (candidates_[i].phones == phones) return i;
        return std::nullopt;
    }

    /// Appends unless the phone sequence is already present; returns whether it grew.
    bool add(Pronunciation p) {
        if (find(p.phones)) return false;
        if (has_probs()) throw Error("word '" + word_ + "': cannot add candidate after probabilities are set");
        candidates_.push_back(std::move(p));
        return true;
    }

    /// Replaces the stored source of an existing baseform.
    void set_source(std::size_t i, Source s) { candidates_.at(i).source = s; }

    void set_probs(std::vector<double> probs) {
        if (probs.size() != candidates_.size())
            throw Error("word '" + word_ + "': " + std::to_string(probs.size()) +
                        " probabilities for " + std::to_string(candidates_.size()) + " candidates");
        probs_ = std::move(probs);
        validate_probs();
    }

    void clear_probs() { probs_.clear(); }

    /// Values are written with 6 decimals, so a parsed vector may be off by the
    /// rounding of each entry; anything beyond that is rejected.
    void validate_probs() const {
        if (probs_.empty()) return;
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0 && p <= 1.0))
                throw Error("word '" + word_ + "': probability " + detail::fixed6(p) + " outside [0,1]");
            sum += p;
        }
        double slack = 1e-9 + 5e-7 * static_cast<double>(probs_.size());
        if (std::fabs(sum - 1.0) > slack)
            throw Error("word '" + word_ + "': probabilities sum to " + std::to_string(sum));
    }

    friend bool operator==(const CandidateSet&, const CandidateSet&) = default;

private:
    std::string word_;
    std::vector<Pronunciation> candidates_;
    std::vector<double> probs_;
};

/// Word -> candidate set; std::map keeps words in byte order for serialization.
struct Lexicon {
    std::map<std::string, CandidateSet> entries;

    bool empty() const { return entries.empty(); }
    std::size_t size() const { return entries.size(); }

    CandidateSet& entry(const std::string& word) {
        auto it = entries.find(word);
        if (it == entries.end()) it = entries.emplace(word, CandidateSet(word)).first;
        return it->second;
    }

    const CandidateSet* find(const std::string& word) const {
        auto it = entries.find(word);
        return it == entries.end() ? nullptr : &it->second;
    }

    std::size_t pronunciation_count() const {
        std::size_t n = 0;
        for (const auto& [w, cs] : entries) n += cs.size();
        return n;
    }

    friend bool operator==(const Lexicon&, const Lexicon&) = default;
};

/// Knobs of the selection pipeline. Defaults follow the usual operating point:
/// delta 1e-5, alpha g2p/pd/ref = 0.02/0.01/0, beta g2p/pd/ref = 10/10/0, top 10.
struct SelectionConfig {
    double delta = 1e-5;
    PerSource<double> alpha{{0.02, 0.01, 0.0}};
    PerSource<double> beta{{10.0, 10.0, 0.0}};
    int top_k = 10;
    double rel_freq_threshold = 0.1;
    int em_max_iters = 200;
    double em_tol = 1e-10;

    /// Throws on hard violations; returns soft warnings (delta outside the
    /// customary [1e-7, 1e-5] band).
    std::vector<std::string> validate() const {
        if (!(delta > 0.0 && delta < 1.0)) throw Error("delta must lie in (0,1), got " + std::to_string(delta));
        for (Source s : kAllSources) {
            if (!(alpha[s] >= 0.0 && alpha[s] <= 1.0))
                throw Error("alpha_" + std::string(to_tag(s)) + " must lie in [0,1]");
            if (!(beta[s] >= 0.0)) throw Error("beta_" + std::string(to_tag(s)) + " must be non-negative");
        }
        if (top_k < 1) throw Error("top_k must be positive");
        if (!(rel_freq_threshold > 0.0 && rel_freq_threshold < 1.0))
            throw Error("rel_freq_threshold must lie in (0,1)");
        if (em_max_iters < 1) throw Error("em_max_iters must be positive");
        if (!(em_tol > 0.0)) throw Error("em_tol must be positive");
        std::vector<std::string> warnings;
        if (delta < 1e-7 || delta > 1e-5)
            warnings.push_back("delta " + std::to_string(delta) + " is outside the customary range [1e-7, 1e-5]");
        return warnings;
    }
};

/// Parses `word TAB source TAB phones [TAB prob]` lines. Duplicate baseforms of a
/// word collapse onto the first occurrence.
inline Lexicon parse_lexicon(std::string_view text) {
    Lexicon lex;
    // Per word: has-prob flag of each kept candidate, in order.
    std::map<std::string, std::vector<std::optional<double>>> probs;
    std::map<std::string, std::size_t> first_line;

    detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        std::string where = "line " + std::to_string(line_no);
        auto fields = detail::split(line, '\t');
        if (fields.size() != 3 && fields.size() != 4)
            throw Error(where + ": expected 3 or 4 tab-separated fields, got " + std::to_string(fields.size()));
        std::string word(fields[0]);
        if (word.empty() || std::any_of(word.begin(), word.end(), detail::is_space))
            throw Error(where + ": bad word token '" + word + "'");
        auto source = source_from_tag(fields[1]);
        if (!source) throw Error(where + ": unknown source tag '" + std::string(fields[1]) + "'");
        Baseform phones;
        try {
            phones = parse_baseform(fields[2]);
        } catch (const Error& e) {
            throw Error(where + ": " + e.what());
        }
        std::optional<double> prob;
        if (fields.size() == 4) prob = detail::parse_double(fields[3], where);

        first_line.try_emplace(word, line_no);
        if (lex.entry(word).add(Pronunciation(std::move(phones), *source))) probs[word].push_back(prob);
    });

    for (auto& [word, ps] : probs) {
        std::size_t given = std::count_if(ps.begin(), ps.end(), [](const auto& p) { return p.has_value(); });
        if (given == 0) continue;
        std::string where = "line " + std::to_string(first_line[word]);
        if (given != ps.size())
            throw Error(where + ": word '" + word + "' has probabilities on some but not all candidates");
        std::vector<double> values;
        for (const auto& p : ps) values.push_back(*p);
        try {
            lex.entries.at(word).set_probs(std::move(values));
        } catch (const Error& e) {
            throw Error(where + ": " + e.what());
        }
    }
    return lex;
}

inline std::string serialize_lexicon(const Lexicon& lex, bool with_probs) {
    std::ostringstream out;
    for (const auto& [word, cs] : lex.entries) {
        if (with_probs && !cs.has_probs()) throw Error("word '" + word + "' has no probabilities to write");
        for (std::size_t i = 0; i < cs.size(); ++i) {
            out << word << '\t' << to_tag(cs[i].source) << '\t' << to_string(cs[i].phones);
            if (with_probs) out << '\t' << detail::fixed6(cs.probs()[i]);
            out << '\n';
        }
    }
    return out.str();
}

}  // namespace lexlearn

#endif  // LEXLEARN_LEXICON_HPP
