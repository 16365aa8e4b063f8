#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "specverse/corpus.hpp"
#include "specverse/disruption.hpp"

namespace specverse {

enum class Estimator { pooled, author_fixed_effects };
enum class SeType { classical, hc1, cluster_author };
enum class TeamCoding { continuous, dummies };

const char* to_string(Estimator e);
const char* to_string(SeType s);

struct OutlierRule {
    int max_refs = 200;
    int max_cites = 200;
    WindowSpec window = WindowSpec::years(5);  // cites counted at this window
};

struct ModelSpec {
    ScoreVariant dv;
    Estimator estimator = Estimator::pooled;
    bool year_dummies = true;
    bool field_dummies = true;
    bool log_cites = false;  // ln(citations at the DV window) + its square
    bool log_refs = false;   // ln(linked reference count) + its square
    TeamCoding team_coding = TeamCoding::continuous;
    bool exclude_outliers = false;
    OutlierRule outlier_rule{};
    SeType se_type = SeType::hc1;
    std::string label;
};

/// Response, named predictors, and row keys for one model. The DV is
/// z-standardized (sample SD) over exactly the rows that survive the
/// model's exclusions.
struct DesignMatrix {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> column_names;
    std::vector<PaperIndex> row_papers;
    std::vector<AuthorIndex> row_authors;  // empty for pooled designs
    std::map<std::string, std::string> reference_levels;

    double dv_mean_raw = 0.0;
    double dv_sd_raw = 0.0;

    // Rows removed while assembling this model's estimation sample.
    std::size_t dropped_undefined = 0;
    std::size_t dropped_outliers = 0;
    std::size_t dropped_zero_window_cites = 0;
    std::size_t dropped_thin_authors = 0;
    std::vector<std::string> warnings;

    bool demeaned = false;
    // Filled by within_transform, keyed by position in `panel_authors`.
    std::vector<AuthorIndex> panel_authors;
    Eigen::VectorXd author_mean_y;
    Eigen::MatrixXd author_mean_x;

    std::optional<std::size_t> column(const std::string& name) const;
    std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
    std::size_t k() const { return static_cast<std::size_t>(X.cols()); }
};

DesignMatrix build_design(const Corpus& corpus, const ScoreMatrix& scores, const ModelSpec& spec,
                          const SampleView& sample);
DesignMatrix build_design(const Corpus& corpus, const ScoreMatrix& scores, const ModelSpec& spec,
                          const AuthorPaperPanel& panel);

/// Subtracts author-level means from y and every X column (dropping the
/// intercept); stores the means so author effects can be recovered. Slope
/// estimates equal least-squares-dummy-variables on the same rows.
DesignMatrix within_transform(const DesignMatrix& design);

struct FitResult {
    std::vector<std::string> column_names;
    Eigen::VectorXd beta;
    Eigen::VectorXd se;
    Eigen::VectorXd residuals;
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t k_eff = 0;      // includes absorbed author effects for within fits
    std::size_t n_clusters = 0; // 0 unless clustered
    double dof_residual = 0.0;  // for t statistics: G-1 clustered, n-k_eff otherwise
    double r_squared = 0.0;
    SeType se_type = SeType::classical;
    bool within = false;

    double coef(const std::string& name) const;
    double se_of(const std::string& name) const;
    std::optional<std::size_t> column(const std::string& name) const;
};

/// Least squares via column-pivoted QR. Throws a numeric error naming the
/// collinear columns when X is rank deficient.
FitResult fit_ols(const DesignMatrix& design, SeType se_type,
                  std::size_t absorbed_effects = 0);

/// Cluster-robust sandwich standard errors:
///   V = c * (X'X)^-1 (sum_g X_g' e_g e_g' X_g) (X'X)^-1,
///   c = [G/(G-1)] * [(N-1)/(N-K_eff)].
/// Scalar arithmetic throughout so the result is bit-comparable against an
/// independently coded sandwich.
Eigen::VectorXd clustered_se(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                             const std::vector<std::int64_t>& clusters, std::size_t k_eff);

struct CoefficientRow {
    std::string term;
    double estimate;
    double se;
    double ci_low;
    double ci_high;
    double p;
};

std::vector<CoefficientRow> summarize_fit(const FitResult& fit, double alpha = 0.05);

struct AuthorEffect {
    AuthorIndex author;
    double alpha_hat;
};

/// alpha_hat_i = mean_y_i - mean_x_i' beta, from the means stored by
/// within_transform.
std::vector<AuthorEffect> recover_author_effects(const DesignMatrix& within_design,
                                                 const FitResult& fit);

/// One model end to end: rows, design, (within), fit. For
/// author_fixed_effects the SE type is always cluster_author.
FitResult run_model(const Corpus& corpus, const ScoreMatrix& scores, const ModelSpec& spec,
                    const SampleView& sample, const AuthorPaperPanel* panel,
                    DesignMatrix* design_out = nullptr);

/// Delimited coefficient report plus a JSON metadata record
/// (n, clusters, R-squared, SE type, dof convention).
void write_fit_report(const FitResult& fit, const std::string& model_id, double alpha,
                      const std::filesystem::path& csv_file,
                      const std::filesystem::path& meta_file);

}  // namespace specverse
