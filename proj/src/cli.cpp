#include "specverse/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include "specverse/corpus.hpp"
#include "specverse/csv.hpp"
#include "specverse/disruption.hpp"
#include "specverse/error.hpp"
#include "specverse/multiverse.hpp"
#include "specverse/oracle.hpp"
#include "specverse/report.hpp"
#include "specverse/synth.hpp"
#include "specverse/version.hpp"

namespace specverse::cli {

namespace {

int report_error(const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    const char* category = err ? err->category_name() : "internal";
    std::cerr << "error: category=" << category << ": " << e.what() << '\n';
    return err ? static_cast<int>(err->category()) : 1;
}

std::vector<int> parse_thresholds(const std::string& text) {
    std::vector<int> out;
    auto parse_one = [&](std::string_view s) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || v < 1) {
            throw usage_error("bad threshold '" + std::string(s) + "'");
        }
        return v;
    };
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const int lo = parse_one(std::string_view(text).substr(0, dots));
        const int hi = parse_one(std::string_view(text).substr(dots + 2));
        if (hi < lo) throw usage_error("bad threshold range '" + text + "'");
        for (int b = lo; b <= hi; ++b) out.push_back(b);
        return out;
    }
    std::vector<std::string> parts;
    split_line(text, ',', parts);
    for (const auto& p : parts) out.push_back(parse_one(p));
    return out;
}

std::vector<WindowSpec> parse_windows(const std::string& text) {
    std::vector<std::string> parts;
    split_line(text, ',', parts);
    std::vector<WindowSpec> out;
    for (const auto& p : parts) out.push_back(WindowSpec::parse(p));
    if (out.empty()) throw usage_error("no windows given");
    return out;
}

}  // namespace

std::string version_string() {
    std::ostringstream os;
    os << "specverse " << kVersion << " (schema " << kSchemaVersion << ", generator "
       << kGeneratorVersion << ")";
    return os.str();
}

int run_ingest(const IngestOptions& options) {
    try {
        LoadOptions load_options;
        load_options.year_range = options.year_range;
        LoadReport report;
        const Corpus corpus = load_corpus(options.papers, options.citations, options.authorships,
                                          options.field_map, load_options, &report);
        save_corpus_binary(corpus, options.out);
        std::cerr << "ingest: " << report.to_string() << '\n';
        if (options.describe) {
            const auto sample = SampleView::all_of(corpus);
            const auto stats =
                descriptive_stats(corpus, sample, {"team_size", "year", "refs"}, false);
            for (const auto& v : stats.variables) {
                std::cout << v.name << ": min=" << format_rounded(v.min, 3)
                          << " max=" << format_rounded(v.max, 3)
                          << " mean=" << format_rounded(v.mean, 3)
                          << " sd=" << format_rounded(v.sd, 3) << " n=" << v.n << '\n';
            }
            for (const auto& f : stats.field_distribution) {
                std::cout << "field " << f.field << ": " << f.count << " ("
                          << format_rounded(f.percent, 1) << "%)\n";
            }
        }
        return 0;
    } catch (const std::exception& e) {
        return report_error(e);
    }
}

int run_disrupt(const DisruptOptions& options) {
    try {
        const Corpus corpus = load_corpus_any(options.corpus);

        SampleView sample;
        if (options.sample_file) {
            std::ifstream in(*options.sample_file);
            if (!in) throw io_error("cannot open '" + options.sample_file->string() + "'");
            std::string line;
            while (std::getline(in, line)) {
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;
                const auto p = corpus.find_paper(line);
                if (!p) throw schema_error("sample lists unknown paper '" + line + "'");
                sample.papers.push_back(*p);
            }
            std::sort(sample.papers.begin(), sample.papers.end());
            sample.papers.erase(std::unique(sample.papers.begin(), sample.papers.end()),
                                sample.papers.end());
        } else {
            FilterSpec filter;
            filter.min_refs = options.min_refs;
            filter.require_cited = options.require_cited;
            filter.require_fully_linked = options.require_fully_linked;
            filter.min_papers_per_author = options.min_papers_per_author;
            filter.year_range = options.year_range;
            sample = apply_filters(corpus, filter);
            std::cerr << "disrupt: sample " << sample.papers.size() << "/" << corpus.paper_count()
                      << " papers (removed: year_range=" << sample.provenance.year_range
                      << " unlinked=" << sample.provenance.unlinked_refs
                      << " min_refs=" << sample.provenance.min_refs
                      << " uncited=" << sample.provenance.uncited
                      << " outliers=" << sample.provenance.outliers
                      << " min_papers_per_author=" << sample.provenance.min_papers_per_author
                      << ")\n";
        }

        const auto thresholds = parse_thresholds(options.thresholds);
        const auto windows = parse_windows(options.windows);
        const auto mode = parse_nr_mode(options.nr_mode);
        std::vector<ScoreVariant> variants;
        for (const auto& w : windows) {
            for (int b : thresholds) variants.push_back({b, w, mode});
        }

        BatchOptions batch;
        batch.workers = options.workers;
        const ScoreMatrix scores = batch_scores(corpus, sample, variants, batch);
        scores.write_csv(corpus, options.out);
        std::cerr << "disrupt: wrote " << sample.papers.size() * variants.size() << " scores to '"
                  << options.out.string() << "'\n";
        return 0;
    } catch (const std::exception& e) {
        return report_error(e);
    }
}

int run_multiverse(const MultiverseOptions& options) {
    try {
        const Corpus corpus = load_corpus_any(options.corpus);
        const ScoreMatrix scores = ScoreMatrix::read_csv(corpus, options.scores);
        const UniverseSpec universe = UniverseSpec::from_json_file(options.universe);

        RunOptions run;
        run.workers = options.workers;
        const EstimateSet set = run_universe(corpus, scores, universe, run);

        std::vector<std::string> warnings;
        export_results(set, options.out_dir, &warnings);
        for (const auto& w : warnings) std::cerr << "multiverse: " << w << '\n';

        const auto summary = summarize(set);
        std::cerr << "multiverse: " << summary.k_ok << "/" << summary.k
                  << " models ok, mean=" << format_rounded(summary.b_mean, 4)
                  << " model_sd=" << format_rounded(summary.model_sd, 4) << '\n';
        return 0;
    } catch (const std::exception& e) {
        return report_error(e);
    }
}

int run_synth(const SynthOptions& options) {
    try {
        SynthSpec spec = SynthSpec::from_json_file(options.spec_file);
        if (options.seed) spec.seed = *options.seed;
        auto [corpus, truth] = generate(spec);
        export_corpus_csv(corpus, options.out_dir);
        truth.save_json(corpus, options.out_dir / "truth.json");
        std::cerr << "synth: " << corpus.paper_count() << " papers, "
                  << corpus.citation_edge_count() << " citations, " << corpus.author_count()
                  << " authors (seed " << spec.seed << ", clamp rate "
                  << format_rounded(truth.clamp_rate, 4) << ") -> '" << options.out_dir.string()
                  << "'\n";
        return 0;
    } catch (const std::exception& e) {
        return report_error(e);
    }
}

int run_report(const ReportOptions& options) {
    try {
        const EstimateSet set = load_estimate_set(options.in_dir);
        const auto summary = summarize(set);
        const auto influences = influence_all(set);

        std::ostringstream text;
        text << render_robustness_table(summary, set.universe.name) << '\n'
             << render_sign_table(summary) << '\n'
             << render_influence_table(influences, set) << '\n'
             << render_extremes_table(set);
        std::cout << text.str();

        if (options.out_dir) {
            std::filesystem::create_directories(*options.out_dir);
            std::ofstream out(*options.out_dir / "report.txt");
            if (!out) {
                throw io_error("cannot write '" + (*options.out_dir / "report.txt").string() + "'");
            }
            out << text.str();
            // delimited companions
            {
                std::ofstream f(*options.out_dir / "robustness.csv");
                f << "models,mean_b,model_sd,negative_significant_share\n";
                const double share =
                    summary.k_ok == 0 ? 0.0
                                      : static_cast<double>(summary.signs.negative_significant) /
                                            static_cast<double>(summary.k_ok);
                f << summary.k_ok << ',' << format_double(summary.b_mean) << ','
                  << format_double(summary.model_sd) << ',' << format_double(share) << '\n';
            }
            {
                std::ofstream f(*options.out_dir / "sign_table.csv");
                f << "significant,negative,positive\n";
                f << "no," << summary.signs.negative_ns << ',' << summary.signs.positive_ns << '\n';
                f << "yes," << summary.signs.negative_significant << ','
                  << summary.signs.positive_significant << '\n';
            }
        }
        return 0;
    } catch (const std::exception& e) {
        return report_error(e);
    }
}

int run_selftest(const SelftestOptions& options) {
    try {
        oracle::SelftestConfig config;
        config.graphs = options.graphs;
        config.systems = options.systems;
        config.panels = options.panels;
        config.seed = options.seed;
        const auto results = oracle::run_selftests(config);
        bool all_ok = true;
        for (const auto& r : results) {
            std::cout << (r.passed ? "PASS" : "FAIL") << ' ' << r.suite << ": " << r.detail << '\n';
            all_ok = all_ok && r.passed;
        }
        return all_ok ? 0 : 1;
    } catch (const std::exception& e) {
        return report_error(e);
    }
}

}  // namespace specverse::cli
