#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "specverse/corpus.hpp"
#include "specverse/disruption.hpp"

// Verification-only re-derivations of the library's core numerics. Each
// function computes its result from definitions, sharing no helper with the
// code path it checks. They back the `selftest` subcommand and the test
// suites; nothing in the analysis pipeline may call them.
namespace specverse::oracle {

/// Disruption score by brute-force enumeration over a flat edge list --
/// linear scans only, no adjacency indices. Guarded to small corpora.
DisruptionScore disruption_brute(const Corpus& corpus, PaperIndex focal, int b,
                                 const WindowSpec& window, NrMode nr_mode);

/// Least squares through explicit normal equations (X'X)^-1 X'y with an
/// independently written Gauss-Jordan inverse.
Eigen::VectorXd ols_normal_equations(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Slope coefficients from least-squares-dummy-variables: X is augmented
/// with one dummy per author (first author as reference plus an intercept)
/// and solved via the normal equations. Returns only the coefficients of the
/// original X columns.
Eigen::VectorXd lsdv_slopes(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const std::vector<std::int64_t>& authors);

/// Cluster sandwich standard errors recomputed from the definition.
std::vector<double> sandwich_se_brute(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                                      const std::vector<std::int64_t>& clusters,
                                      std::size_t k_eff);

struct SuiteResult {
    std::string suite;
    bool passed = false;
    std::string detail;
};

struct SelftestConfig {
    std::uint64_t seed = 20240917;
    int graphs = 300;
    int systems = 100;
    int panels = 100;
};

/// Runs the disruption, OLS, LSDV, and sandwich oracle suites against the
/// fast paths.
std::vector<SuiteResult> run_selftests(const SelftestConfig& config = {});

}  // namespace specverse::oracle
