#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "specverse/corpus.hpp"
#include "specverse/disruption.hpp"
#include "specverse/regress.hpp"

namespace specverse {

struct UniverseDimension {
    std::string name;                  // disruption_index, citation_window,
                                       // citation_count, reference_count,
                                       // outliers, estimator, nr_mode
    std::vector<std::string> options;  // unique within the dimension
    std::string reference;             // anchor option for influence statistics
};

struct UniverseSpec {
    std::string name;
    std::vector<UniverseDimension> dimensions;  // first dimension varies slowest
    std::vector<std::string> fixed_covariates;  // year_dummies / field_dummies
    NrMode nr_mode = NrMode::consistent;
    OutlierRule outlier_rule{};
    double alpha = 0.05;
    int min_papers_per_author = 2;
    // Fully resolved anchor model (dimension name -> option), run alongside
    // the universe; influence percentages divide by its coefficient.
    std::optional<std::map<std::string, std::string>> benchmark;
    std::string benchmark_label;
    // Partial assignments marked infeasible at enumeration time.
    std::vector<std::map<std::string, std::string>> infeasible;

    std::size_t size() const;
    void validate() const;

    static UniverseSpec from_json_file(const std::filesystem::path& file);
    static UniverseSpec from_json_text(const std::string& text, const std::string& source);
};

struct ResolvedModel {
    std::string id;
    std::vector<std::size_t> option_idx;  // one entry per dimension
    ModelSpec spec;
    bool infeasible = false;
};

/// Full Cartesian product in mixed-radix order (first dimension slowest),
/// each cell resolved into an executable ModelSpec.
std::vector<ResolvedModel> enumerate_universe(const UniverseSpec& universe);

/// Distinct DV variants the universe (and its benchmark) will request.
std::vector<ScoreVariant> required_variants(const UniverseSpec& universe);

enum class ModelStatus { ok, failed };

struct ModelRow {
    std::string id;
    std::vector<std::size_t> option_idx;
    ModelStatus status = ModelStatus::failed;
    std::string failure_reason;
    double estimate = 0.0;
    double se = 0.0;
    double p = 1.0;
    std::size_t n = 0;
    std::size_t n_clusters = 0;
    double r_squared = 0.0;
};

struct EstimateSet {
    UniverseSpec universe;
    std::vector<ModelRow> rows;  // canonical enumeration order
    std::optional<ModelRow> benchmark;

    std::size_t k() const { return rows.size(); }
    std::size_t k_ok() const;
};

struct RunOptions {
    int workers = 1;
};

/// Builds and fits every model through the regression module. The pooled
/// sample is the score matrix's paper set; the panel is derived from it.
/// Failures are captured per model, never thrown.
EstimateSet run_universe(const Corpus& corpus, const ScoreMatrix& scores,
                         const UniverseSpec& universe, const RunOptions& options = {});

struct SignTable {
    std::size_t negative_significant = 0;
    std::size_t negative_ns = 0;
    std::size_t positive_significant = 0;
    std::size_t positive_ns = 0;

    std::size_t total() const {
        return negative_significant + negative_ns + positive_significant + positive_ns;
    }
};

struct MultiverseSummary {
    std::size_t k = 0;
    std::size_t k_ok = 0;
    double b_mean = 0.0;
    double v_m = 0.0;      // population variance of estimates across models
    double model_sd = 0.0;
    SignTable signs;
    double alpha = 0.05;
};

MultiverseSummary summarize(const EstimateSet& set);
MultiverseSummary summarize(const EstimateSet& set, double alpha);

/// Fraction of ok models with a negative, significant estimate.
double sign_stability(const EstimateSet& set, double alpha, SignTable* table = nullptr);

struct InfluenceStat {
    std::string dimension;
    std::string option;  // non-reference option this delta belongs to
    double delta = 0.0;  // mean b(option) - b(reference) over matched cells
    std::size_t n_pairs = 0;
    std::optional<double> percent_of_benchmark;
};

/// Marginal effect of each non-reference option of `dimension`, averaged
/// over all combinations of the other dimensions. Requires the full
/// factorial set; matched cells where either side failed are skipped.
std::vector<InfluenceStat> influence(const EstimateSet& set, const std::string& dimension);
std::vector<InfluenceStat> influence_all(const EstimateSet& set);

/// Rows with the smallest and largest estimate (ties broken by canonical
/// model order).
std::pair<ModelRow, ModelRow> extremes(const EstimateSet& set);

/// Percentile gap of estimated author effects, in standardized DV units.
double author_effect_gap(std::span<const double> alpha_hat, double p_high = 90.0,
                         double p_low = 50.0);

/// Writes models.csv, benchmark.csv (when present), summary.json, curve.csv,
/// influence.csv, and density.csv (skipped with a warning for degenerate
/// estimate sets). Byte-deterministic given the same inputs.
void export_results(const EstimateSet& set, const std::filesystem::path& out_dir,
                    std::vector<std::string>* warnings = nullptr);

/// Reloads an exported estimate set (models.csv + summary.json) losslessly.
EstimateSet load_estimate_set(const std::filesystem::path& out_dir);

}  // namespace specverse
