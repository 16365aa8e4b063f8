#include <CLI11.hpp>
#include <iostream>

#include "specverse/cli.hpp"

namespace cli = specverse::cli;

namespace {

// Exit codes: 0 ok, 2 usage, 3 io, 4 schema, 5 validation, 6 numeric, 1 other.
constexpr int kUsageExit = 2;

std::optional<std::pair<int, int>> parse_year_range(const std::string& text) {
    if (text.empty()) return std::nullopt;
    const auto dash = text.find(':');
    if (dash == std::string::npos) {
        throw CLI::ValidationError("--year-range", "expected LO:HI");
    }
    return std::make_pair(std::stoi(text.substr(0, dash)), std::stoi(text.substr(dash + 1)));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"specverse: disruption indices and multiverse regression analysis over "
                 "citation networks"};
    app.set_version_flag("--version", cli::version_string());
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Load and validate corpus CSVs, write binary corpus");
    cli::IngestOptions ingest_opts;
    std::string ingest_years;
    ingest->add_option("--papers", ingest_opts.papers, "papers CSV")->required();
    ingest->add_option("--citations", ingest_opts.citations, "citations CSV")->required();
    ingest->add_option("--authorships", ingest_opts.authorships, "authorships CSV")->required();
    std::string field_map;
    ingest->add_option("--field-map", field_map, "category -> major field CSV");
    ingest->add_option("--out", ingest_opts.out, "output corpus file")->required();
    ingest->add_option("--year-range", ingest_years, "reject papers outside LO:HI");
    ingest->add_flag("--describe", ingest_opts.describe, "print descriptive statistics");

    // disrupt
    auto* disrupt = app.add_subcommand("disrupt", "Compute disruption scores over a sample");
    cli::DisruptOptions disrupt_opts;
    std::string disrupt_sample;
    std::string disrupt_years;
    disrupt->add_option("--corpus", disrupt_opts.corpus, "corpus file or CSV directory")->required();
    disrupt->add_option("--thresholds", disrupt_opts.thresholds, "e.g. 1..5 or 1,3,5");
    disrupt->add_option("--windows", disrupt_opts.windows, "e.g. 5,10,15,horizon:2023");
    disrupt->add_option("--nr-mode", disrupt_opts.nr_mode, "consistent|legacy");
    disrupt->add_option("--out", disrupt_opts.out, "output scores CSV")->required();
    disrupt->add_option("--sample", disrupt_sample, "file with one paper id per line");
    disrupt->add_option("--min-refs", disrupt_opts.min_refs, "minimum linked references");
    bool keep_uncited = false;
    disrupt->add_flag("--keep-uncited", keep_uncited, "keep papers nobody cites");
    disrupt->add_option("--min-papers-per-author", disrupt_opts.min_papers_per_author,
                        "author threshold for the panel filter");
    disrupt->add_option("--year-range", disrupt_years, "sample year range LO:HI");
    disrupt->add_option("--workers", disrupt_opts.workers, "worker threads");

    // multiverse
    auto* multiverse = app.add_subcommand("multiverse", "Run a universe of model specifications");
    cli::MultiverseOptions multiverse_opts;
    multiverse->add_option("--corpus", multiverse_opts.corpus, "corpus file or CSV directory")
        ->required();
    multiverse->add_option("--scores", multiverse_opts.scores, "scores CSV from disrupt")
        ->required();
    multiverse->add_option("--universe", multiverse_opts.universe, "universe JSON")->required();
    multiverse->add_option("--out", multiverse_opts.out_dir, "output directory")->required();
    multiverse->add_option("--workers", multiverse_opts.workers, "worker threads")
        ->envname("SPECVERSE_WORKERS");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic citation network");
    cli::SynthOptions synth_opts;
    std::uint64_t synth_seed = 0;
    bool synth_seed_set = false;
    synth->add_option("--spec", synth_opts.spec_file, "generator spec JSON")->required();
    synth->add_option("--seed", synth_seed, "override the spec's seed")
        ->each([&](const std::string&) { synth_seed_set = true; });
    synth->add_option("--out", synth_opts.out_dir, "output directory")->required();

    // report
    auto* report = app.add_subcommand("report", "Render multiverse summaries as text tables");
    cli::ReportOptions report_opts;
    std::string report_out;
    report->add_option("--in", report_opts.in_dir, "multiverse output directory")->required();
    report->add_option("--out", report_out, "directory for report files");

    // selftest
    auto* selftest = app.add_subcommand("selftest", "Run the oracle verification suites");
    cli::SelftestOptions selftest_opts;
    selftest->add_option("--graphs", selftest_opts.graphs, "random graphs for the disruption oracle");
    selftest->add_option("--systems", selftest_opts.systems, "random systems for the OLS/sandwich oracles");
    selftest->add_option("--panels", selftest_opts.panels, "random panels for the LSDV oracle");
    selftest->add_option("--seed", selftest_opts.seed, "RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << "error: category=usage: " << e.what() << '\n';
        std::cerr << app.help() << '\n';
        return kUsageExit;
    }

    try {
        if (*ingest) {
            if (!field_map.empty()) ingest_opts.field_map = field_map;
            ingest_opts.year_range = parse_year_range(ingest_years);
            return cli::run_ingest(ingest_opts);
        }
        if (*disrupt) {
            if (!disrupt_sample.empty()) disrupt_opts.sample_file = disrupt_sample;
            disrupt_opts.year_range = parse_year_range(disrupt_years);
            disrupt_opts.require_cited = !keep_uncited;
            return cli::run_disrupt(disrupt_opts);
        }
        if (*multiverse) return cli::run_multiverse(multiverse_opts);
        if (*synth) {
            if (synth_seed_set) synth_opts.seed = synth_seed;
            return cli::run_synth(synth_opts);
        }
        if (*report) {
            if (!report_out.empty()) report_opts.out_dir = report_out;
            return cli::run_report(report_opts);
        }
        if (*selftest) return cli::run_selftest(selftest_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: category=usage: " << e.what() << '\n';
        return kUsageExit;
    }
    return kUsageExit;
}
