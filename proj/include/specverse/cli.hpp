#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace specverse::cli {

// Subcommand entry points, kept separate from main() so tests can drive the
// exact production code paths. Each returns a process exit code and reports
// machine-parsable errors ("error: category=<cat>: ...") on stderr.

struct IngestOptions {
    std::filesystem::path papers;
    std::filesystem::path citations;
    std::filesystem::path authorships;
    std::optional<std::filesystem::path> field_map;
    std::filesystem::path out;
    std::optional<std::pair<int, int>> year_range;
    bool describe = false;
};
int run_ingest(const IngestOptions& options);

struct DisruptOptions {
    std::filesystem::path corpus;  // corpus binary or directory of CSVs
    std::string thresholds = "1..5";
    std::string windows = "5,10,15";
    std::string nr_mode = "consistent";
    std::filesystem::path out;
    std::optional<std::filesystem::path> sample_file;  // one paper id per line
    // filter flags, applied when no sample file is given
    int min_refs = 10;
    bool require_cited = true;
    bool require_fully_linked = true;
    int min_papers_per_author = 2;
    std::optional<std::pair<int, int>> year_range;
    int workers = 1;
};
int run_disrupt(const DisruptOptions& options);

struct MultiverseOptions {
    std::filesystem::path corpus;
    std::filesystem::path scores;
    std::filesystem::path universe;
    std::filesystem::path out_dir;
    int workers = 1;
};
int run_multiverse(const MultiverseOptions& options);

struct SynthOptions {
    std::filesystem::path spec_file;
    std::optional<std::uint64_t> seed;  // overrides the spec's seed
    std::filesystem::path out_dir;
};
int run_synth(const SynthOptions& options);

struct ReportOptions {
    std::filesystem::path in_dir;   // an export_results directory
    std::optional<std::filesystem::path> out_dir;
};
int run_report(const ReportOptions& options);

struct SelftestOptions {
    int graphs = 300;
    int systems = 100;
    int panels = 100;
    std::uint64_t seed = 20240917;
};
int run_selftest(const SelftestOptions& options);

std::string version_string();

}  // namespace specverse::cli
