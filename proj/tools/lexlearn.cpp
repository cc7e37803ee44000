// lexlearn: learn a compact pronunciation lexicon from per-utterance evidence.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "lexlearn/lexlearn.hpp"

namespace {

using lexlearn::Error;

/// Usage problems detected after CLI11 parsing.
struct UsageError : Error {
    using Error::Error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(path + ": cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(path + ": cannot open for writing");
    out << content;
    if (!out) throw Error(path + ": write failed");
}

/// Runs `parse` on the file's text, prefixing errors with the path.
template <typename Parse>
auto parse_file(const std::string& path, Parse&& parse) {
    std::string text = read_file(path);
    try {
        return parse(text);
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

lexlearn::Lexicon load_lexicon(const std::string& path) {
    return parse_file(path, [](const std::string& t) { return lexlearn::parse_lexicon(t); });
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct SelectArgs {
    std::string lexicon;
    std::string evidence;
    std::string out;
    std::string trace;
    int jobs = 1;
    lexlearn::SelectionConfig cfg;
};

void add_select_flags(CLI::App* cmd, SelectArgs& a, bool evidence_required) {
    cmd->add_option("--lexicon", a.lexicon, "Combined candidate lexicon")->required();
    auto* ev = cmd->add_option("--evidence", a.evidence, "Per-utterance pronunciation posteriors");
    if (evidence_required) ev->required();
    cmd->add_option("--out", a.out, "Learned lexicon output")->required();
    cmd->add_option("--delta", a.cfg.delta, "Likelihood floor")->capture_default_str();
    cmd->add_option("--alpha-g2p", a.cfg.alpha[lexlearn::Source::G2P])->capture_default_str();
    cmd->add_option("--alpha-pd", a.cfg.alpha[lexlearn::Source::PhoneticDecoding])->capture_default_str();
    cmd->add_option("--alpha-ref", a.cfg.alpha[lexlearn::Source::Reference])->capture_default_str();
    cmd->add_option("--beta-g2p", a.cfg.beta[lexlearn::Source::G2P])->capture_default_str();
    cmd->add_option("--beta-pd", a.cfg.beta[lexlearn::Source::PhoneticDecoding])->capture_default_str();
    cmd->add_option("--beta-ref", a.cfg.beta[lexlearn::Source::Reference])->capture_default_str();
    cmd->add_option("--top-k", a.cfg.top_k, "Candidates kept per word by average posterior")->capture_default_str();
    cmd->add_option("--em-tol", a.cfg.em_tol)->capture_default_str();
    cmd->add_option("--em-max-iters", a.cfg.em_max_iters)->capture_default_str();
    cmd->add_option("--jobs", a.jobs, "Worker threads")->capture_default_str();
}

std::vector<std::pair<std::string, std::string>> config_entries(const lexlearn::SelectionConfig& cfg) {
    using lexlearn::Source;
    return {{"delta", num(cfg.delta)},
            {"alpha_g2p", num(cfg.alpha[Source::G2P])},
            {"alpha_pd", num(cfg.alpha[Source::PhoneticDecoding])},
            {"alpha_ref", num(cfg.alpha[Source::Reference])},
            {"beta_g2p", num(cfg.beta[Source::G2P])},
            {"beta_pd", num(cfg.beta[Source::PhoneticDecoding])},
            {"beta_ref", num(cfg.beta[Source::Reference])},
            {"top_k", std::to_string(cfg.top_k)},
            {"em_tol", num(cfg.em_tol)},
            {"em_max_iters", std::to_string(cfg.em_max_iters)}};
}

void warn(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

lexlearn::EvidenceMap load_evidence_file(const std::string& path, double delta) {
    return parse_file(path, [&](const std::string& t) { return lexlearn::load_evidence(t, delta); });
}

int run_select(const SelectArgs& a) {
    Stopwatch clock;
    warn(a.cfg.validate());
    auto lex = load_lexicon(a.lexicon);
    auto ev = load_evidence_file(a.evidence, a.cfg.delta);
    auto run = lexlearn::select_lexicon(lex, ev, a.cfg, a.jobs);
    write_file(a.out, lexlearn::serialize_lexicon(run.lexicon, true));
    if (!a.trace.empty()) write_file(a.trace, run.trace);

    lexlearn::RunManifest m{"select", config_entries(a.cfg), {{"lexicon", a.lexicon}, {"evidence", a.evidence}},
                            {{"lexicon", a.out}}, 0.0, {}};
    m.config.emplace_back("jobs", std::to_string(a.jobs));
    if (!a.trace.empty()) m.outputs.emplace_back("trace", a.trace);
    m.counts = run.counts;
    m.wall_seconds = clock.seconds();
    write_file(a.out + ".manifest", m.to_text());
    return 0;
}

int run_baseline(const SelectArgs& a, const std::string& method, double pp_threshold) {
    Stopwatch clock;
    warn(a.cfg.validate());
    auto lex = load_lexicon(a.lexicon);
    lexlearn::LexiconRun run;
    lexlearn::RunManifest m{"baseline", config_entries(a.cfg), {{"lexicon", a.lexicon}}, {{"lexicon", a.out}}, 0.0, {}};
    m.config.emplace_back("method", method);
    if (method == "pp") {
        if (a.evidence.empty()) throw UsageError("--method pp needs --evidence");
        auto ev = load_evidence_file(a.evidence, a.cfg.delta);
        run = lexlearn::pp_select_lexicon(lex, ev, a.cfg, pp_threshold, a.jobs);
        m.inputs.emplace_back("evidence", a.evidence);
        m.config.emplace_back("pp_threshold", num(pp_threshold));
        m.config.emplace_back("jobs", std::to_string(a.jobs));
    } else {
        run = lexlearn::g2p_one_best_lexicon(lex);
    }
    write_file(a.out, lexlearn::serialize_lexicon(run.lexicon, true));
    m.counts = run.counts;
    m.wall_seconds = clock.seconds();
    write_file(a.out + ".manifest", m.to_text());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pronunciation lexicon learning by likelihood-reduction selection"};
    app.require_subcommand(1);

    // merge
    std::string g2p_path, ref_path, pd_path, merge_out;
    double rel_freq = 0.1;
    auto* merge = app.add_subcommand("merge", "Combine G2P, reference and phonetic-decoding candidates");
    merge->add_option("--g2p", g2p_path, "G2P candidate lexicon");
    merge->add_option("--ref", ref_path, "Reference (seed) lexicon");
    merge->add_option("--pd-counts", pd_path, "Phonetic-decoding alignment counts");
    merge->add_option("--rel-freq-threshold", rel_freq)->capture_default_str();
    merge->add_option("--out", merge_out, "Combined lexicon output")->required();

    // select
    SelectArgs sel;
    auto* select = app.add_subcommand("select", "Greedy likelihood-reduction pronunciation selection");
    add_select_flags(select, sel, true);
    select->add_option("--trace", sel.trace, "Selection report output");

    // baseline
    SelectArgs base;
    std::string method;
    double pp_threshold = 0.4;
    auto* baseline = app.add_subcommand("baseline", "Baseline pruning: pp (probability threshold) or g2p1best");
    add_select_flags(baseline, base, false);
    baseline->add_option("--method", method)->required()->check(CLI::IsMember({"pp", "g2p1best"}));
    baseline->add_option("--pp-threshold", pp_threshold)->capture_default_str();

    // simulate
    std::string sim_truth, sim_cands, sim_config, sim_out;
    long long sim_seed = -1;
    auto* simulate = app.add_subcommand("simulate", "Synthetic evidence from a ground-truth lexicon");
    simulate->add_option("--truth", sim_truth)->required();
    simulate->add_option("--candidates", sim_cands)->required();
    simulate->add_option("--config", sim_config)->required();
    simulate->add_option("--out", sim_out)->required();
    simulate->add_option("--seed", sim_seed, "Overrides the config file's seed");

    // evaluate
    std::string ev_learned, ev_truth, ev_out;
    auto* evaluate = app.add_subcommand("evaluate", "Precision/recall of a learned lexicon against ground truth");
    evaluate->add_option("--learned", ev_learned)->required();
    evaluate->add_option("--truth", ev_truth)->required();
    evaluate->add_option("--out", ev_out)->required();

    // make-task
    lexlearn::TaskSpec task;
    std::string task_truth, task_cands;
    auto* make_task = app.add_subcommand("make-task", "Random ground-truth lexicon plus inflated candidate pool");
    make_task->add_option("--words", task.num_words)->capture_default_str();
    make_task->add_option("--distractors", task.distractors)->capture_default_str();
    make_task->add_option("--max-truth", task.max_truth)->capture_default_str();
    make_task->add_option("--seed", task.seed)->capture_default_str();
    make_task->add_option("--truth-out", task_truth)->required();
    make_task->add_option("--candidates-out", task_cands)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*merge) {
            if (g2p_path.empty() && ref_path.empty() && pd_path.empty())
                throw UsageError("merge needs at least one of --g2p, --ref, --pd-counts");
            Stopwatch clock;
            lexlearn::Lexicon g2p, ref;
            std::map<std::string, lexlearn::AlignmentCounts> pd;
            lexlearn::RunManifest m{"merge", {{"rel_freq_threshold", num(rel_freq)}}, {}, {{"lexicon", merge_out}}, 0.0, {}};
            if (!g2p_path.empty()) {
                g2p = load_lexicon(g2p_path);
                m.inputs.emplace_back("g2p", g2p_path);
            }
            if (!ref_path.empty()) {
                ref = load_lexicon(ref_path);
                m.inputs.emplace_back("ref", ref_path);
            }
            if (!pd_path.empty()) {
                pd = parse_file(pd_path, [](const std::string& t) { return lexlearn::parse_alignment_counts(t); });
                m.inputs.emplace_back("pd_counts", pd_path);
            }
            auto merged = lexlearn::merge_sources(g2p, ref, pd, rel_freq);
            write_file(merge_out, lexlearn::serialize_lexicon(merged, false));
            m.counts.words = merged.size();
            m.counts.candidates_in = g2p.pronunciation_count() + ref.pronunciation_count();
            for (const auto& [w, c] : pd) m.counts.candidates_in += c.counts.size();
            m.counts.candidates_out = merged.pronunciation_count();
            m.wall_seconds = clock.seconds();
            write_file(merge_out + ".manifest", m.to_text());
        } else if (*select) {
            return run_select(sel);
        } else if (*baseline) {
            return run_baseline(base, method, pp_threshold);
        } else if (*simulate) {
            Stopwatch clock;
            auto cfg = parse_file(sim_config, [](const std::string& t) { return lexlearn::parse_sim_config(t); });
            if (sim_seed >= 0) cfg.seed = static_cast<std::uint64_t>(sim_seed);
            cfg.ground_truth = load_lexicon(sim_truth);
            auto cands = load_lexicon(sim_cands);
            auto ev = lexlearn::simulate_evidence(cands, cfg);
            write_file(sim_out, lexlearn::serialize_evidence(ev));
            lexlearn::RunManifest m{"simulate",
                                    {{"confusability", num(cfg.confusability)},
                                     {"noise", num(cfg.noise)},
                                     {"utterances_per_word", std::to_string(cfg.utterances_per_word)},
                                     {"seed", std::to_string(cfg.seed)},
                                     {"delta", num(cfg.delta)}},
                                    {{"truth", sim_truth}, {"candidates", sim_cands}, {"config", sim_config}},
                                    {{"evidence", sim_out}}, 0.0, {}};
            m.counts.words = ev.size();
            m.wall_seconds = clock.seconds();
            write_file(sim_out + ".manifest", m.to_text());
        } else if (*evaluate) {
            Stopwatch clock;
            auto learned = load_lexicon(ev_learned);
            auto truth = load_lexicon(ev_truth);
            auto rep = lexlearn::evaluate(learned, truth);
            write_file(ev_out, lexlearn::format_eval_lines(rep));
            std::cout << lexlearn::format_eval_table(rep);
            lexlearn::RunManifest m{"evaluate", {}, {{"learned", ev_learned}, {"truth", ev_truth}}, {{"report", ev_out}}, 0.0, {}};
            m.counts.words = learned.size();
            m.counts.candidates_out = learned.pronunciation_count();
            m.wall_seconds = clock.seconds();
            write_file(ev_out + ".manifest", m.to_text());
        } else if (*make_task) {
            auto t = lexlearn::make_synthetic_task(task);
            write_file(task_truth, lexlearn::serialize_lexicon(t.truth, true));
            write_file(task_cands, lexlearn::serialize_lexicon(t.candidates, false));
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
