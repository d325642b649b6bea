#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flakerank/analyzer.hpp"
#include "flakerank/csv.hpp"
#include "flakerank/errors.hpp"
#include "flakerank/generator.hpp"
#include "flakerank/ingest.hpp"
#include "flakerank/labeler.hpp"
#include "flakerank/ranker.hpp"
#include "flakerank/rulebook.hpp"
#include "flakerank/version.hpp"

namespace fr = flakerank;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;       // I/O or structural parse failure
constexpr int kExitValidation = 2;  // well-formed input with invalid values

void diag(const std::string& msg) { std::cerr << "[flakerank] " << msg << "\n"; }

/// Writes table text to a file, or to stdout when path is "-".
void emit(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw fr::io_error("cannot write " + path);
    out << content;
    out.flush();
    if (!out) throw fr::io_error("write failed: " + path);
}

struct LabelArgs {
    std::string input;
    std::string output;
    std::optional<std::string> rules;
    std::optional<std::string> logs_dir;
    std::size_t jobs = 1;
    std::size_t max_log_bytes = 0;
};

struct AnalyzeArgs {
    std::string input;
    std::string output;
    double cost_rate = 1.0;
    double overhead = 0.0;
    std::optional<std::string> reference_date;
    std::optional<std::string> evolution_out;
};

struct RankArgs {
    std::string input;
    std::string output;
    std::optional<std::size_t> k;
    std::uint64_t seed = 42;
    std::optional<std::string> dump_model;
    std::optional<std::string> report;
    std::optional<std::string> evolution_in;
};

void run_label(const LabelArgs& a) {
    const fr::Rulebook rb = fr::load_rules(a.rules);
    const fr::Dataset jobs = fr::parse_jobs(a.input, a.logs_dir);
    if (jobs.stats.duration_defaulted > 0) {
        diag("warning: " + std::to_string(jobs.stats.duration_defaulted) +
             " rows lack both duration and timestamps; duration set to 0");
    }
    fr::LabelSummary summary;
    fr::LabelOptions opts;
    opts.workers = std::max<std::size_t>(1, a.jobs);
    opts.max_log_bytes = a.max_log_bytes;
    const fr::LabeledDataset labeled = fr::label_dataset(jobs, rb, opts, &summary);

    std::ostringstream buf;
    fr::write_labeled(labeled, buf);
    emit(a.output, buf.str());

    diag("labeled " + std::to_string(summary.n_rows) + " jobs: " +
         std::to_string(summary.n_flaky) + " flaky, " + std::to_string(summary.n_unknown) +
         " uncategorized");
    for (const auto& [category, count] : summary.category_counts) {
        diag("  " + category + ": " + std::to_string(count));
    }
}

void run_analyze(const AnalyzeArgs& a) {
    const fr::LabeledDataset labeled = fr::parse_labeled(a.input);
    fr::CostModel cm;
    cm.cost_rate = a.cost_rate;
    cm.diagnosis_overhead = a.overhead;
    if (a.reference_date) {
        const auto ts = fr::parse_rfc3339(*a.reference_date);
        if (!ts) throw fr::validation_error("bad --reference-date: " + *a.reference_date);
        cm.reference_date = ts;
    }
    const auto rfm = fr::compute_rfm(labeled, cm);
    if (rfm.empty()) diag("warning: no flaky rows; RFM output is empty");

    std::ostringstream buf;
    fr::write_rfm(rfm, buf);
    emit(a.output, buf.str());

    if (a.evolution_out) {
        const auto evolution = fr::compute_evolution(labeled);
        std::ostringstream ebuf;
        fr::write_evolution(evolution, ebuf);
        emit(*a.evolution_out, ebuf.str());
    }
    diag("analyzed " + std::to_string(rfm.size()) + " categories");
}

void run_rank(const RankArgs& a) {
    const auto rfm = fr::parse_rfm(a.input);
    const fr::RankResult result = fr::rank_categories(rfm, a.k, a.seed);

    std::ostringstream buf;
    fr::write_ranked(result.ranked, buf);
    emit(a.output, buf.str());

    if (a.dump_model) {
        nlohmann::json j;
        j["k"] = result.k_used;
        j["auto_k"] = result.auto_k;
        j["seed"] = a.seed;
        j["inertia"] = result.model.inertia;
        if (result.model.silhouette) {
            j["silhouette"] = *result.model.silhouette;
        } else {
            j["silhouette"] = nullptr;
        }
        nlohmann::json centroids = nlohmann::json::array();
        for (std::size_t c = 0; c < result.model.k; ++c) {
            const auto span = result.model.centroid(c);
            centroids.push_back(std::vector<double>(span.begin(), span.end()));
        }
        j["centroids"] = centroids;
        nlohmann::json assignments = nlohmann::json::array();
        for (std::size_t i = 0; i < result.point_categories.size(); ++i) {
            assignments.push_back({{"category", result.point_categories[i]},
                                   {"cluster", result.model.assignments[i]}});
        }
        j["assignments"] = assignments;
        emit(*a.dump_model, j.dump(2) + "\n");
    }

    if (a.report) {
        std::vector<fr::EvolutionRow> evolution;
        if (a.evolution_in) {
            // Evolution CSV re-read via the same strict schema.
            const std::string data = fr::read_file(*a.evolution_in);
            fr::CsvReader reader(data, *a.evolution_in);
            std::vector<std::string> fields;
            if (!reader.next(fields) || fields != fr::kEvolutionHeader) {
                throw fr::validation_error(*a.evolution_in + ": expected evolution header");
            }
            while (reader.next(fields)) {
                if (fields.size() != 3) {
                    throw fr::parse_error(*a.evolution_in + ": bad evolution row");
                }
                fr::EvolutionRow row;
                row.category = fields[0];
                row.period = fields[1];
                row.count = std::stoll(fields[2]);
                evolution.push_back(std::move(row));
            }
        }
        emit(*a.report, fr::render_report(result.ranked, evolution));
    }
    if (!result.ranked.empty()) {
        diag("ranked " + std::to_string(result.ranked.size()) + " categories into " +
             std::to_string(result.k_used) + (result.auto_k ? " clusters (auto)" : " clusters"));
    } else {
        diag("warning: empty RFM input; nothing to rank");
    }
}

int dispatch(const std::function<void()>& action) {
    try {
        action();
        return kExitOk;
    } catch (const fr::validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const fr::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flakerank - identify, analyze, and prioritize flaky CI job failure categories"};
    app.set_version_flag("--version", std::string("flakerank ") + fr::kVersion);
    app.require_subcommand(1);

    std::function<void()> action;

    // label
    auto label_args = std::make_shared<LabelArgs>();
    CLI::App* label = app.add_subcommand("label", "Flag flaky job failures and categorize them");
    label->add_option("-i,--input", label_args->input, "Jobs CSV")->required();
    label->add_option("-o,--output", label_args->output, "Labeled CSV ('-' for stdout)")->required();
    label->add_option("--rules", label_args->rules, "Rule file (default: builtin rulebook)")
        ->envname("FLAKERANK_RULES");
    label->add_option("--logs-dir", label_args->logs_dir, "Directory with <id>.log files")
        ->envname("FLAKERANK_LOGS_DIR");
    label->add_option("--jobs", label_args->jobs, "Worker threads")
        ->envname("FLAKERANK_JOBS")
        ->check(CLI::PositiveNumber);
    label->add_option("--max-log-bytes", label_args->max_log_bytes,
                      "Scan only the first N bytes of each log (0 = unlimited)")
        ->envname("FLAKERANK_MAX_LOG_BYTES");
    label->callback([&action, label_args]() { action = [label_args]() { run_label(*label_args); }; });

    // analyze
    auto analyze_args = std::make_shared<AnalyzeArgs>();
    CLI::App* analyze = app.add_subcommand("analyze", "Compute per-category RFM measures");
    analyze->add_option("-i,--input", analyze_args->input, "Labeled CSV")->required();
    analyze->add_option("-o,--output", analyze_args->output, "RFM CSV ('-' for stdout)")->required();
    analyze->add_option("--cost-rate", analyze_args->cost_rate, "Currency per compute-hour")
        ->envname("FLAKERANK_COST_RATE");
    analyze->add_option("--diagnosis-overhead", analyze_args->overhead,
                        "Currency per flaky failure")
        ->envname("FLAKERANK_DIAGNOSIS_OVERHEAD");
    analyze->add_option("--reference-date", analyze_args->reference_date,
                        "RFC 3339 recency reference (default: derived from data)")
        ->envname("FLAKERANK_REFERENCE_DATE");
    analyze->add_option("--evolution", analyze_args->evolution_out,
                        "Also write monthly evolution CSV here");
    analyze->callback(
        [&action, analyze_args]() { action = [analyze_args]() { run_analyze(*analyze_args); }; });

    // rank
    auto rank_args = std::make_shared<RankArgs>();
    CLI::App* rank = app.add_subcommand("rank", "Score, cluster, and rank categories");
    rank->add_option("-i,--input", rank_args->input, "RFM CSV")->required();
    rank->add_option("-o,--output", rank_args->output, "Ranked CSV ('-' for stdout)")->required();
    rank->add_option("--k", rank_args->k, "Cluster count (default: auto by silhouette)")
        ->envname("FLAKERANK_K");
    rank->add_option("--seed", rank_args->seed, "Clustering seed")->envname("FLAKERANK_SEED");
    rank->add_option("--dump-model", rank_args->dump_model, "Write clustering model JSON here")
        ->group("");  // debugging aid, hidden
    rank->add_option("--report", rank_args->report, "Write markdown report here");
    rank->add_option("--evolution", rank_args->evolution_in,
                     "Evolution CSV to include in the report");
    rank->callback([&action, rank_args]() { action = [rank_args]() { run_rank(*rank_args); }; });

    // run
    auto run_label_args = std::make_shared<LabelArgs>();
    auto run_analyze_args = std::make_shared<AnalyzeArgs>();
    auto run_rank_args = std::make_shared<RankArgs>();
    auto run_outdir = std::make_shared<std::string>();
    CLI::App* runcmd = app.add_subcommand("run", "label => analyze => rank in one pass");
    runcmd->add_option("-i,--input", run_label_args->input, "Jobs CSV")->required();
    runcmd->add_option("-o,--output", *run_outdir, "Output directory")->required();
    runcmd->add_option("--rules", run_label_args->rules, "Rule file (default: builtin rulebook)")
        ->envname("FLAKERANK_RULES");
    runcmd->add_option("--logs-dir", run_label_args->logs_dir, "Directory with <id>.log files")
        ->envname("FLAKERANK_LOGS_DIR");
    runcmd->add_option("--jobs", run_label_args->jobs, "Worker threads")
        ->envname("FLAKERANK_JOBS")
        ->check(CLI::PositiveNumber);
    runcmd->add_option("--max-log-bytes", run_label_args->max_log_bytes,
                       "Scan only the first N bytes of each log (0 = unlimited)")
        ->envname("FLAKERANK_MAX_LOG_BYTES");
    runcmd->add_option("--cost-rate", run_analyze_args->cost_rate, "Currency per compute-hour")
        ->envname("FLAKERANK_COST_RATE");
    runcmd->add_option("--diagnosis-overhead", run_analyze_args->overhead,
                       "Currency per flaky failure")
        ->envname("FLAKERANK_DIAGNOSIS_OVERHEAD");
    runcmd->add_option("--reference-date", run_analyze_args->reference_date,
                       "RFC 3339 recency reference (default: derived from data)")
        ->envname("FLAKERANK_REFERENCE_DATE");
    runcmd->add_option("--k", run_rank_args->k, "Cluster count (default: auto by silhouette)")
        ->envname("FLAKERANK_K");
    runcmd->add_option("--seed", run_rank_args->seed, "Clustering seed")->envname("FLAKERANK_SEED");
    runcmd->callback([&action, run_label_args, run_analyze_args, run_rank_args, run_outdir]() {
        action = [run_label_args, run_analyze_args, run_rank_args, run_outdir]() {
            const fs::path outdir(*run_outdir);
            std::error_code ec;
            fs::create_directories(outdir, ec);
            if (ec) throw fr::io_error("cannot create " + outdir.string() + ": " + ec.message());

            LabelArgs la = *run_label_args;
            la.output = (outdir / "labeled.csv").string();
            int completed = 0;
            try {
                run_label(la);
                ++completed;

                AnalyzeArgs aa = *run_analyze_args;
                aa.input = la.output;
                aa.output = (outdir / "rfm.csv").string();
                aa.evolution_out = (outdir / "evolution.csv").string();
                run_analyze(aa);
                ++completed;

                RankArgs ra = *run_rank_args;
                ra.input = aa.output;
                ra.output = (outdir / "ranked.csv").string();
                ra.report = (outdir / "report.md").string();
                ra.evolution_in = aa.evolution_out;
                run_rank(ra);
                ++completed;
            } catch (...) {
                diag("warning: pipeline stopped after " + std::to_string(completed) +
                     " of 3 stages; earlier outputs are preserved in " + outdir.string());
                throw;
            }
            diag("pipeline outputs written to " + outdir.string());
        };
    });

    // rules
    auto rules_path = std::make_shared<std::optional<std::string>>();
    auto rules_list = std::make_shared<bool>(false);
    CLI::App* rules = app.add_subcommand("rules", "Inspect the effective rulebook");
    rules->add_option("--rules", *rules_path, "Rule file (default: builtin rulebook)")
        ->envname("FLAKERANK_RULES");
    rules->add_flag("--list", *rules_list, "Print categories and pattern counts");
    rules->callback([&action, rules_path, rules_list]() {
        action = [rules_path, rules_list]() {
            const fr::Rulebook rb = fr::load_rules(*rules_path);
            if (*rules_list) {
                for (const auto& rule : rb.rules) {
                    std::printf("%s %zu\n", rule.category.c_str(), rule.patterns.size());
                }
            } else {
                diag("rulebook '" + rb.source + "' with " + std::to_string(rb.rules.size()) +
                     " rules (use --list to print them)");
            }
        };
    });

    // gen (hidden): synthetic corpus with a ground-truth manifest
    auto gen_spec = std::make_shared<fr::GeneratorSpec>();
    auto gen_out = std::make_shared<std::string>();
    auto gen_manifest = std::make_shared<std::optional<std::string>>();
    auto gen_start = std::make_shared<std::string>("2024-01-01T00:00:00Z");
    CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic jobs corpus");
    gen->group("");
    gen->add_option("-o,--output", *gen_out, "Jobs CSV to write")->required();
    gen->add_option("--manifest", *gen_manifest, "Ground-truth manifest JSON to write");
    gen->add_option("-n,--n-jobs", gen_spec->n_jobs, "Total rows");
    gen->add_option("--flaky-rate", gen_spec->flaky_rate, "Fraction of rows that are flaky failures");
    gen->add_option("--seed", gen_spec->seed, "Generator seed")->envname("FLAKERANK_SEED");
    gen->add_option("--span-days", gen_spec->span_days, "Time span of created_at");
    gen->add_option("--start", *gen_start, "Span start (RFC 3339)");
    gen->callback([&action, gen_spec, gen_out, gen_manifest, gen_start]() {
        action = [gen_spec, gen_out, gen_manifest, gen_start]() {
            const auto ts = fr::parse_rfc3339(*gen_start);
            if (!ts) throw fr::validation_error("bad --start: " + *gen_start);
            fr::GeneratorSpec spec = *gen_spec;
            spec.start = *ts;
            const fr::Manifest m = fr::generate_corpus(spec, *gen_out, *gen_manifest);
            diag("generated " + std::to_string(m.n_rows) + " rows (" +
                 std::to_string(m.n_flaky) + " flaky) into " + *gen_out);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    return dispatch(action);
}
