#include "specverse/oracle.hpp"

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "specverse/error.hpp"
#include "specverse/regress.hpp"

namespace specverse::oracle {

namespace {

struct Edge {
    PaperIndex citing;
    PaperIndex cited;
};

std::vector<Edge> flat_edges(const Corpus& corpus) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < corpus.paper_count(); ++i) {
        const auto p = static_cast<PaperIndex>(i);
        for (PaperIndex t : corpus.references(p)) edges.push_back({p, t});
    }
    return edges;
}

bool cites(const std::vector<Edge>& edges, PaperIndex a, PaperIndex b) {
    for (const auto& e : edges) {
        if (e.citing == a && e.cited == b) return true;
    }
    return false;
}

}  // namespace

DisruptionScore disruption_brute(const Corpus& corpus, PaperIndex focal, int b,
                                 const WindowSpec& window, NrMode nr_mode) {
    if (corpus.paper_count() > 10000) {
        throw validation_error("disruption_brute is guarded to corpora of <= 10^4 papers");
    }
    if (b < 1) throw validation_error("disruption threshold b must be >= 1");

    DisruptionScore score;
    score.focal = focal;
    score.threshold_b = b;
    score.window = window;
    score.nr_mode = nr_mode;

    const auto edges = flat_edges(corpus);
    const int focal_year = corpus.paper(focal).year;

    bool focal_has_refs = false;
    for (const auto& e : edges) {
        if (e.citing == focal) {
            focal_has_refs = true;
            break;
        }
    }
    if (!focal_has_refs) {
        score.status = ScoreStatus::zero_refs;
        return score;
    }

    const int r_min = nr_mode == NrMode::consistent ? b : 1;
    for (std::size_t qi = 0; qi < corpus.paper_count(); ++qi) {
        const auto q = static_cast<PaperIndex>(qi);
        if (q == focal) continue;
        if (!window.admits(focal_year, corpus.paper(q).year)) continue;

        // shared references: every (q -> r) edge matched by a (focal -> r) edge
        int shared = 0;
        for (const auto& eq : edges) {
            if (eq.citing != q) continue;
            for (const auto& ef : edges) {
                if (ef.citing == focal && ef.cited == eq.cited) {
                    ++shared;
                    break;
                }
            }
        }
        const bool q_cites_focal = cites(edges, q, focal);
        if (q_cites_focal) {
            if (shared >= b) {
                score.n_b++;
            } else {
                score.n_f++;
            }
        } else if (shared >= r_min) {
            score.n_r++;
        }
    }

    const std::int64_t denom = score.n_f + score.n_b + score.n_r;
    if (denom == 0) {
        score.status = ScoreStatus::undefined_score;
        return score;
    }
    score.value = static_cast<double>(score.n_f - score.n_b) / static_cast<double>(denom);
    return score;
}

// ---------------------------------------------------------------------------
// Regression oracles
// ---------------------------------------------------------------------------

namespace {

// Independent Gauss-Jordan inverse (partial pivoting, row-major). Written
// separately from the library's copy on purpose.
std::vector<double> gj_inverse(std::vector<double> m, std::size_t k) {
    std::vector<double> inv(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) inv[i * k + i] = 1.0;
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t pivot = col;
        double best = std::fabs(m[col * k + col]);
        for (std::size_t r = col + 1; r < k; ++r) {
            const double v = std::fabs(m[r * k + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0) throw numeric_error("singular matrix in oracle inverse");
        if (pivot != col) {
            for (std::size_t c = 0; c < k; ++c) {
                std::swap(m[pivot * k + c], m[col * k + c]);
                std::swap(inv[pivot * k + c], inv[col * k + c]);
            }
        }
        const double d = m[col * k + col];
        for (std::size_t c = 0; c < k; ++c) {
            m[col * k + c] /= d;
            inv[col * k + c] /= d;
        }
        for (std::size_t r = 0; r < k; ++r) {
            if (r == col) continue;
            const double f = m[r * k + col];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < k; ++c) {
                m[r * k + c] -= f * m[col * k + c];
                inv[r * k + c] -= f * inv[col * k + c];
            }
        }
    }
    return inv;
}

}  // namespace

Eigen::VectorXd ols_normal_equations(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const auto n = static_cast<std::size_t>(X.rows());
    const auto k = static_cast<std::size_t>(X.cols());

    std::vector<double> xtx(k * k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t l = j; l < k; ++l) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sum += X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                       X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l));
            }
            xtx[j * k + l] = sum;
            xtx[l * k + j] = sum;
        }
    }
    std::vector<double> xty(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                   y[static_cast<Eigen::Index>(i)];
        }
        xty[j] = sum;
    }
    const auto inv = gj_inverse(std::move(xtx), k);
    Eigen::VectorXd beta(static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j) {
        double sum = 0.0;
        for (std::size_t l = 0; l < k; ++l) sum += inv[j * k + l] * xty[l];
        beta[static_cast<Eigen::Index>(j)] = sum;
    }
    return beta;
}

Eigen::VectorXd lsdv_slopes(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const std::vector<std::int64_t>& authors) {
    const auto n = static_cast<std::size_t>(X.rows());
    const auto k = static_cast<std::size_t>(X.cols());
    if (authors.size() != n) throw usage_error("author vector length mismatch");

    std::vector<std::int64_t> distinct = authors;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const auto g = distinct.size();

    // intercept + slopes + one dummy per non-reference author
    Eigen::MatrixXd full(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(1 + k + g - 1));
    full.setZero();
    for (std::size_t i = 0; i < n; ++i) full(static_cast<Eigen::Index>(i), 0) = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            full(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(1 + j)) =
                X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }
    for (std::size_t gi = 1; gi < g; ++gi) {
        for (std::size_t i = 0; i < n; ++i) {
            if (authors[i] == distinct[gi]) {
                full(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k + gi)) = 1.0;
            }
        }
    }
    const Eigen::VectorXd all = ols_normal_equations(full, y);
    return all.segment(1, static_cast<Eigen::Index>(k));
}

std::vector<double> sandwich_se_brute(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                                      const std::vector<std::int64_t>& clusters,
                                      std::size_t k_eff) {
    const auto n = static_cast<std::size_t>(X.rows());
    const auto k = static_cast<std::size_t>(X.cols());

    std::vector<std::int64_t> ids = clusters;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    const auto g = ids.size();
    if (g < 2) throw numeric_error("sandwich oracle needs at least 2 clusters");

    std::vector<double> xtx(k * k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t l = j; l < k; ++l) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sum += X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                       X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l));
            }
            xtx[j * k + l] = sum;
            xtx[l * k + j] = sum;
        }
    }
    const auto bread = gj_inverse(std::move(xtx), k);

    std::vector<double> meat(k * k, 0.0);
    for (std::size_t gi = 0; gi < g; ++gi) {
        std::vector<double> v(k, 0.0);
        for (std::size_t j = 0; j < k; ++j) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (clusters[i] != ids[gi]) continue;
                sum += X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                       residuals[static_cast<Eigen::Index>(i)];
            }
            v[j] = sum;
        }
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t l = 0; l < k; ++l) meat[j * k + l] += v[j] * v[l];
        }
    }

    const double gd = static_cast<double>(g);
    const double nd = static_cast<double>(n);
    const double c = (gd / (gd - 1.0)) * ((nd - 1.0) / (nd - static_cast<double>(k_eff)));

    std::vector<double> bm(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            double sum = 0.0;
            for (std::size_t l = 0; l < k; ++l) sum += bread[i * k + l] * meat[l * k + j];
            bm[i * k + j] = sum;
        }
    }
    std::vector<double> se(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        double sum = 0.0;
        for (std::size_t l = 0; l < k; ++l) sum += bm[i * k + l] * bread[l * k + i];
        se[i] = std::sqrt(c * sum);
    }
    return se;
}

// ---------------------------------------------------------------------------
// Self-test suites
// ---------------------------------------------------------------------------

namespace {

Corpus random_graph(std::mt19937_64& rng, int max_papers) {
    std::uniform_int_distribution<int> n_dist(5, max_papers);
    const int n = n_dist(rng);
    std::uniform_int_distribution<int> year_dist(2000, 2005);
    std::uniform_int_distribution<int> team_dist(1, 8);

    Corpus::Builder builder;
    std::vector<std::string> ids;
    std::vector<int> years;
    for (int i = 0; i < n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "p%03d", i);
        ids.emplace_back(buf);
        years.push_back(year_dist(rng));
        builder.add_paper(ids.back(), years.back(), "F", team_dist(rng));
    }
    // arbitrary direction edges (real metadata contains anomalies, and the
    // window rule must hold regardless)
    std::uniform_int_distribution<int> node(0, n - 1);
    const int target_edges = 2 * n;
    std::set<std::pair<int, int>> seen;
    for (int e = 0; e < target_edges; ++e) {
        const int a = node(rng);
        const int b = node(rng);
        if (a == b) continue;
        if (!seen.insert({a, b}).second) continue;
        builder.add_citation(ids[static_cast<std::size_t>(a)], ids[static_cast<std::size_t>(b)]);
    }
    return builder.build();
}

bool scores_equal(const DisruptionScore& a, const DisruptionScore& b) {
    if (a.status != b.status) return false;
    if (a.status != ScoreStatus::ok) return true;
    return a.n_f == b.n_f && a.n_b == b.n_b && a.n_r == b.n_r && a.value == b.value;
}

SuiteResult disruption_suite(std::mt19937_64& rng, int graphs) {
    SuiteResult result{"disruption_oracle", true, ""};
    std::size_t checked = 0;
    for (int gi = 0; gi < graphs; ++gi) {
        const Corpus corpus = random_graph(rng, 50);
        const std::vector<WindowSpec> windows = {
            WindowSpec::years(0), WindowSpec::years(1), WindowSpec::years(5),
            WindowSpec::horizon(corpus.max_year()), WindowSpec::horizon(2002)};
        std::vector<ScoreVariant> variants;
        for (const auto& w : windows) {
            for (int b = 1; b <= 5; ++b) {
                variants.push_back({b, w, NrMode::consistent});
                variants.push_back({b, w, NrMode::legacy});
            }
        }
        const auto sample = SampleView::all_of(corpus);
        const auto matrix = batch_scores(corpus, sample, variants);
        for (std::size_t row = 0; row < sample.papers.size(); ++row) {
            const PaperIndex focal = sample.papers[row];
            for (std::size_t vi = 0; vi < variants.size(); ++vi) {
                const auto& v = variants[vi];
                const auto brute = disruption_brute(corpus, focal, v.b, v.window, v.nr_mode);
                const auto& cell = matrix.cell(row, vi);
                DisruptionScore fast;
                fast.n_f = cell.n_f;
                fast.n_b = cell.n_b;
                fast.n_r = cell.n_r;
                fast.value = cell.value;
                fast.status = cell.status;
                if (!scores_equal(fast, brute)) {
                    result.passed = false;
                    std::ostringstream os;
                    os << "mismatch on graph " << gi << " paper '" << corpus.paper(focal).id
                       << "' variant " << v.to_string() << ": fast (" << cell.n_f << ","
                       << cell.n_b << "," << cell.n_r << ") vs brute (" << brute.n_f << ","
                       << brute.n_b << "," << brute.n_r << ")";
                    result.detail = os.str();
                    return result;
                }
                ++checked;
            }
        }
    }
    result.detail = std::to_string(checked) + " scores compared across " +
                    std::to_string(graphs) + " random graphs";
    return result;
}

SuiteResult ols_suite(std::mt19937_64& rng, int systems) {
    SuiteResult result{"ols_normal_equations", true, ""};
    std::normal_distribution<double> noise(0.0, 1.0);
    double worst = 0.0;
    for (int s = 0; s < systems; ++s) {
        std::uniform_int_distribution<int> n_dist(40, 90);
        std::uniform_int_distribution<int> k_dist(3, 6);
        const int n = n_dist(rng);
        const int k = k_dist(rng);
        Eigen::MatrixXd X(n, k);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = 1.0;
            for (int j = 1; j < k; ++j) X(i, j) = noise(rng);
        }
        Eigen::VectorXd beta(k);
        for (int j = 0; j < k; ++j) beta[j] = noise(rng);
        Eigen::VectorXd y = X * beta;
        for (int i = 0; i < n; ++i) y[i] += 0.3 * noise(rng);

        DesignMatrix design;
        design.X = X;
        design.y = y;
        design.column_names.resize(static_cast<std::size_t>(k), "x");
        for (int j = 0; j < k; ++j) design.column_names[static_cast<std::size_t>(j)] = "x" + std::to_string(j);
        const auto fit = fit_ols(design, SeType::classical);
        const auto ref = ols_normal_equations(X, y);
        const double rel = (fit.beta - ref).norm() / std::max(1e-30, ref.norm());
        worst = std::max(worst, rel);
        if (rel > 1e-8) {
            result.passed = false;
            result.detail = "system " + std::to_string(s) + " relative error " +
                            std::to_string(rel);
            return result;
        }
    }
    std::ostringstream os;
    os << systems << " systems, worst relative error " << worst;
    result.detail = os.str();
    return result;
}

SuiteResult lsdv_suite(std::mt19937_64& rng, int panels) {
    SuiteResult result{"lsdv_within", true, ""};
    std::normal_distribution<double> noise(0.0, 1.0);
    double worst = 0.0;
    for (int s = 0; s < panels; ++s) {
        std::uniform_int_distribution<int> g_dist(4, 12);
        std::uniform_int_distribution<int> rows_dist(2, 6);
        std::uniform_int_distribution<int> k_dist(1, 3);
        const int g = g_dist(rng);
        const int k = k_dist(rng);

        // paper pool shared across authors, so some rows duplicate papers
        const int pool = 3 * g;
        std::vector<Eigen::VectorXd> paper_x(static_cast<std::size_t>(pool));
        std::vector<double> paper_y(static_cast<std::size_t>(pool));
        for (int p = 0; p < pool; ++p) {
            paper_x[static_cast<std::size_t>(p)] = Eigen::VectorXd::NullaryExpr(
                k, [&](Eigen::Index) { return noise(rng); });
            paper_y[static_cast<std::size_t>(p)] = noise(rng);
        }
        std::vector<std::int64_t> authors;
        std::vector<int> papers;
        std::uniform_int_distribution<int> paper_dist(0, pool - 1);
        for (int a = 0; a < g; ++a) {
            const int rows = rows_dist(rng);
            std::set<int> mine;
            while (static_cast<int>(mine.size()) < rows) mine.insert(paper_dist(rng));
            for (int p : mine) {
                authors.push_back(a);
                papers.push_back(p);
            }
        }
        const auto n = static_cast<int>(authors.size());
        Eigen::MatrixXd X(n, k);
        Eigen::VectorXd y(n);
        std::vector<double> author_effects(static_cast<std::size_t>(g));
        for (auto& e : author_effects) e = noise(rng);
        for (int i = 0; i < n; ++i) {
            X.row(i) = paper_x[static_cast<std::size_t>(papers[static_cast<std::size_t>(i)])];
            y[i] = paper_y[static_cast<std::size_t>(papers[static_cast<std::size_t>(i)])] +
                   author_effects[static_cast<std::size_t>(authors[static_cast<std::size_t>(i)])];
        }

        // within transform through the library path
        DesignMatrix design;
        design.X.resize(n, k + 1);
        design.X.col(0).setOnes();
        design.X.rightCols(k) = X;
        design.y = y;
        design.column_names.push_back("const");
        for (int j = 0; j < k; ++j) design.column_names.push_back("x" + std::to_string(j));
        design.row_papers.assign(static_cast<std::size_t>(n), 0);
        design.row_authors.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            design.row_authors[static_cast<std::size_t>(i)] =
                static_cast<AuthorIndex>(authors[static_cast<std::size_t>(i)]);
        }
        const auto demeaned = within_transform(design);
        const auto fit = fit_ols(demeaned, SeType::classical, demeaned.panel_authors.size());

        const auto ref = lsdv_slopes(X, y, authors);
        const double rel = (fit.beta - ref).norm() / std::max(1e-12, ref.norm());
        worst = std::max(worst, rel);
        if (rel > 1e-6) {
            result.passed = false;
            result.detail = "panel " + std::to_string(s) + " slope mismatch, relative error " +
                            std::to_string(rel);
            return result;
        }
    }
    std::ostringstream os;
    os << panels << " panels, worst relative slope error " << worst;
    result.detail = os.str();
    return result;
}

SuiteResult sandwich_suite(std::mt19937_64& rng, int systems) {
    SuiteResult result{"cluster_sandwich", true, ""};
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int s = 0; s < systems; ++s) {
        std::uniform_int_distribution<int> n_dist(30, 80);
        std::uniform_int_distribution<int> k_dist(2, 5);
        std::uniform_int_distribution<int> g_dist(4, 10);
        const int n = n_dist(rng);
        const int k = k_dist(rng);
        const int g = g_dist(rng);
        Eigen::MatrixXd X(n, k);
        Eigen::VectorXd e(n);
        std::vector<std::int64_t> clusters(static_cast<std::size_t>(n));
        std::uniform_int_distribution<int> cluster_dist(0, g - 1);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = 1.0;
            for (int j = 1; j < k; ++j) X(i, j) = noise(rng);
            e[i] = noise(rng);
            clusters[static_cast<std::size_t>(i)] = cluster_dist(rng);
        }
        const auto k_eff = static_cast<std::size_t>(k);
        const auto fast = clustered_se(X, e, clusters, k_eff);
        const auto brute = sandwich_se_brute(X, e, clusters, k_eff);
        for (int j = 0; j < k; ++j) {
            if (fast[j] != brute[static_cast<std::size_t>(j)]) {
                result.passed = false;
                std::ostringstream os;
                os.precision(17);
                os << "system " << s << " column " << j << ": fast " << fast[j] << " vs brute "
                   << brute[static_cast<std::size_t>(j)];
                result.detail = os.str();
                return result;
            }
        }
    }
    result.detail = std::to_string(systems) + " clustered systems, exact agreement";
    return result;
}

}  // namespace

std::vector<SuiteResult> run_selftests(const SelftestConfig& config) {
    std::vector<SuiteResult> results;
    {
        std::mt19937_64 rng(config.seed);
        results.push_back(disruption_suite(rng, config.graphs));
    }
    {
        std::mt19937_64 rng(config.seed + 1);
        results.push_back(ols_suite(rng, config.systems));
    }
    {
        std::mt19937_64 rng(config.seed + 2);
        results.push_back(lsdv_suite(rng, config.panels));
    }
    {
        std::mt19937_64 rng(config.seed + 3);
        results.push_back(sandwich_suite(rng, config.systems));
    }
    return results;
}

}  // namespace specverse::oracle
