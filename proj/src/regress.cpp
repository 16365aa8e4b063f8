#include "specverse/regress.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "specverse/csv.hpp"
#include "specverse/error.hpp"
#include "specverse/stats.hpp"

namespace specverse {

const char* to_string(Estimator e) {
    return e == Estimator::pooled ? "pooled" : "author_fixed_effects";
}

const char* to_string(SeType s) {
    switch (s) {
        case SeType::classical: return "classical";
        case SeType::hc1: return "hc1";
        case SeType::cluster_author: return "cluster_author";
    }
    return "classical";
}

std::optional<std::size_t> DesignMatrix::column(const std::string& name) const {
    auto it = std::find(column_names.begin(), column_names.end(), name);
    if (it == column_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - column_names.begin());
}

double FitResult::coef(const std::string& name) const {
    auto c = column(name);
    if (!c) throw numeric_error("no coefficient '" + name + "' in fit");
    return beta[static_cast<Eigen::Index>(*c)];
}

double FitResult::se_of(const std::string& name) const {
    auto c = column(name);
    if (!c) throw numeric_error("no coefficient '" + name + "' in fit");
    return se[static_cast<Eigen::Index>(*c)];
}

std::optional<std::size_t> FitResult::column(const std::string& name) const {
    auto it = std::find(column_names.begin(), column_names.end(), name);
    if (it == column_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - column_names.begin());
}

// ---------------------------------------------------------------------------
// Design construction
// ---------------------------------------------------------------------------

namespace {

struct RowSource {
    std::vector<PaperIndex> papers;
    std::vector<AuthorIndex> authors;  // empty for pooled
};

// Dummy coding for an integer-valued column. Levels seen in fewer than two
// rows fold into the reference with a warning instead of producing an
// unestimable column.
struct DummyBlock {
    std::vector<int> levels;  // emitted dummy levels, ascending
    int reference;
};

DummyBlock plan_dummies(const std::vector<int>& values, std::optional<int> forced_reference,
                        const std::string& what, std::vector<std::string>& warnings) {
    std::map<int, std::size_t> counts;
    for (int v : values) counts[v]++;
    if (counts.empty()) throw numeric_error("no rows for " + what + " dummies");

    int reference;
    if (forced_reference && counts.count(*forced_reference)) {
        reference = *forced_reference;
    } else {
        reference = counts.begin()->first;
    }

    DummyBlock block;
    block.reference = reference;
    for (const auto& [level, count] : counts) {
        if (level == reference) continue;
        if (count < 2) {
            warnings.push_back(what + " level " + std::to_string(level) + " has " +
                               std::to_string(count) + " row(s); merged into reference");
            continue;
        }
        block.levels.push_back(level);
    }
    return block;
}

DesignMatrix build_design_rows(const Corpus& corpus, const ScoreMatrix& scores,
                               const ModelSpec& spec, RowSource rows) {
    DesignMatrix design;
    const auto variant_idx = scores.find_variant(spec.dv);
    if (!variant_idx) {
        throw usage_error("score matrix lacks DV variant " + spec.dv.to_string());
    }

    const bool panel = !rows.authors.empty();

    // Per-model estimation sample: drop undefined scores, then outliers, then
    // rows whose windowed citation count cannot be logged.
    std::vector<std::size_t> keep;
    keep.reserve(rows.papers.size());
    std::vector<double> dv_raw;
    std::vector<std::int64_t> window_cites;
    dv_raw.reserve(rows.papers.size());

    std::vector<std::int64_t> cites_cache(corpus.paper_count(), -1);
    auto cites_at_dv_window = [&](PaperIndex p) {
        auto& c = cites_cache[static_cast<std::size_t>(p)];
        if (c < 0) c = citation_count(corpus, p, spec.dv.window);
        return c;
    };
    std::vector<std::int64_t> outlier_cites_cache;
    auto cites_at_outlier_window = [&](PaperIndex p) {
        if (spec.outlier_rule.window == spec.dv.window) return cites_at_dv_window(p);
        if (outlier_cites_cache.empty()) outlier_cites_cache.assign(corpus.paper_count(), -1);
        auto& c = outlier_cites_cache[static_cast<std::size_t>(p)];
        if (c < 0) c = citation_count(corpus, p, spec.outlier_rule.window);
        return c;
    };

    for (std::size_t i = 0; i < rows.papers.size(); ++i) {
        const PaperIndex p = rows.papers[i];
        const auto row = scores.row_of(p);
        if (!row) {
            throw usage_error("paper '" + corpus.paper(p).id + "' missing from score matrix");
        }
        const auto& cell = scores.cell(*row, *variant_idx);
        if (cell.status != ScoreStatus::ok) {
            design.dropped_undefined++;
            continue;
        }
        if (spec.exclude_outliers) {
            const auto refs = static_cast<std::int64_t>(corpus.references(p).size());
            if (refs > spec.outlier_rule.max_refs ||
                cites_at_outlier_window(p) > spec.outlier_rule.max_cites) {
                design.dropped_outliers++;
                continue;
            }
        }
        if (spec.log_cites && cites_at_dv_window(p) <= 0) {
            design.dropped_zero_window_cites++;
            continue;
        }
        keep.push_back(i);
    }

    // Authors reduced below two rows by the exclusions cannot support a
    // within transform; drop their remaining rows.
    if (panel) {
        std::map<AuthorIndex, std::size_t> author_rows;
        for (std::size_t i : keep) author_rows[rows.authors[i]]++;
        std::vector<std::size_t> kept;
        kept.reserve(keep.size());
        for (std::size_t i : keep) {
            if (author_rows[rows.authors[i]] >= 2) {
                kept.push_back(i);
            } else {
                design.dropped_thin_authors++;
            }
        }
        keep.swap(kept);
    }

    const auto n = keep.size();
    if (n == 0) throw numeric_error("model has no estimation rows after exclusions");

    design.row_papers.reserve(n);
    for (std::size_t i : keep) design.row_papers.push_back(rows.papers[i]);
    if (panel) {
        design.row_authors.reserve(n);
        for (std::size_t i : keep) design.row_authors.push_back(rows.authors[i]);
    }

    dv_raw.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = scores.row_of(design.row_papers[r]);
        dv_raw[r] = scores.cell(*row, *variant_idx).value;
    }

    design.dv_mean_raw = mean(dv_raw);
    design.dv_sd_raw = sample_sd(dv_raw);
    if (!(design.dv_sd_raw > 0.0)) {
        throw numeric_error("zero-variance DV " + spec.dv.to_string());
    }

    design.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        design.y[static_cast<Eigen::Index>(r)] = (dv_raw[r] - design.dv_mean_raw) / design.dv_sd_raw;
    }

    // Column plan.
    std::vector<std::string> names;
    names.push_back("const");

    std::vector<int> team(n), years(n), fields(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& paper = corpus.paper(design.row_papers[r]);
        team[r] = paper.team_size;
        years[r] = paper.year;
        fields[r] = paper.field;
    }

    DummyBlock team_block{{}, 0};
    if (spec.team_coding == TeamCoding::continuous) {
        names.push_back("team_size");
    } else {
        team_block = plan_dummies(team, 1, "team_size", design.warnings);
        design.reference_levels["team_size"] = std::to_string(team_block.reference);
        for (int lvl : team_block.levels) names.push_back("team_" + std::to_string(lvl));
    }

    DummyBlock year_block{{}, 0};
    if (spec.year_dummies) {
        const int earliest = *std::min_element(years.begin(), years.end());
        year_block = plan_dummies(years, earliest, "year", design.warnings);
        design.reference_levels["year"] = std::to_string(year_block.reference);
        for (int lvl : year_block.levels) names.push_back("year_" + std::to_string(lvl));
    }

    DummyBlock field_block{{}, 0};
    if (spec.field_dummies) {
        std::optional<int> biology;
        for (std::size_t f = 0; f < corpus.field_names().size(); ++f) {
            if (corpus.field_names()[f] == "Biology") biology = static_cast<int>(f);
        }
        // Reference: Biology when present in the estimation rows, otherwise
        // the lexicographically first field present.
        std::map<std::string, int> present;
        for (std::size_t r = 0; r < n; ++r) {
            present[corpus.field_names()[static_cast<std::size_t>(fields[r])]] = fields[r];
        }
        std::optional<int> forced;
        if (biology && std::any_of(fields.begin(), fields.end(),
                                   [&](int f) { return f == *biology; })) {
            forced = *biology;
        } else if (!present.empty()) {
            forced = present.begin()->second;
        }
        field_block = plan_dummies(fields, forced, "field", design.warnings);
        design.reference_levels["field"] =
            corpus.field_names()[static_cast<std::size_t>(field_block.reference)];
        for (int lvl : field_block.levels) {
            names.push_back("field_" + corpus.field_names()[static_cast<std::size_t>(lvl)]);
        }
    }

    if (spec.log_refs) {
        names.push_back("log_refs");
        names.push_back("log_refs_sq");
    }
    if (spec.log_cites) {
        names.push_back("log_cites");
        names.push_back("log_cites_sq");
    }

    design.column_names = names;
    design.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(names.size()));
    design.X.setZero();

    std::size_t col = 0;
    design.X.col(static_cast<Eigen::Index>(col++)).setOnes();

    if (spec.team_coding == TeamCoding::continuous) {
        for (std::size_t r = 0; r < n; ++r) {
            design.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) = team[r];
        }
        ++col;
    } else {
        for (int lvl : team_block.levels) {
            for (std::size_t r = 0; r < n; ++r) {
                design.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) =
                    team[r] == lvl ? 1.0 : 0.0;
            }
            ++col;
        }
    }
    if (spec.year_dummies) {
        for (int lvl : year_block.levels) {
            for (std::size_t r = 0; r < n; ++r) {
                design.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) =
                    years[r] == lvl ? 1.0 : 0.0;
            }
            ++col;
        }
    }
    if (spec.field_dummies) {
        for (int lvl : field_block.levels) {
            for (std::size_t r = 0; r < n; ++r) {
                design.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) =
                    fields[r] == lvl ? 1.0 : 0.0;
            }
            ++col;
        }
    }
    if (spec.log_refs) {
        for (std::size_t r = 0; r < n; ++r) {
            const auto refs = static_cast<std::int64_t>(corpus.references(design.row_papers[r]).size());
            if (refs <= 0) {
                throw numeric_error("log of non-positive reference count for paper '" +
                                    corpus.paper(design.row_papers[r]).id + "'");
            }
            const double lr = std::log(static_cast<double>(refs));
            design.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) = lr;
            design.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col + 1)) = lr * lr;
        }
        col += 2;
    }
    if (spec.log_cites) {
        for (std::size_t r = 0; r < n; ++r) {
            const auto cites = cites_at_dv_window(design.row_papers[r]);
            if (cites <= 0) {
                throw numeric_error("log of non-positive citation count for paper '" +
                                    corpus.paper(design.row_papers[r]).id + "'");
            }
            const double lc = std::log(static_cast<double>(cites));
            design.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) = lc;
            design.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col + 1)) = lc * lc;
        }
        col += 2;
    }

    return design;
}

}  // namespace

DesignMatrix build_design(const Corpus& corpus, const ScoreMatrix& scores, const ModelSpec& spec,
                          const SampleView& sample) {
    RowSource rows;
    rows.papers = sample.papers;
    return build_design_rows(corpus, scores, spec, std::move(rows));
}

DesignMatrix build_design(const Corpus& corpus, const ScoreMatrix& scores, const ModelSpec& spec,
                          const AuthorPaperPanel& panel) {
    RowSource rows;
    rows.papers.reserve(panel.rows.size());
    rows.authors.reserve(panel.rows.size());
    for (const auto& row : panel.rows) {
        rows.papers.push_back(row.paper);
        rows.authors.push_back(row.author);
    }
    return build_design_rows(corpus, scores, spec, std::move(rows));
}

DesignMatrix within_transform(const DesignMatrix& design) {
    if (design.row_authors.empty()) {
        throw usage_error("within_transform requires panel rows with authors");
    }
    if (design.demeaned) throw usage_error("design is already demeaned");

    DesignMatrix out;
    out.row_papers = design.row_papers;
    out.row_authors = design.row_authors;
    out.reference_levels = design.reference_levels;
    out.dv_mean_raw = design.dv_mean_raw;
    out.dv_sd_raw = design.dv_sd_raw;
    out.dropped_undefined = design.dropped_undefined;
    out.dropped_outliers = design.dropped_outliers;
    out.dropped_zero_window_cites = design.dropped_zero_window_cites;
    out.dropped_thin_authors = design.dropped_thin_authors;
    out.warnings = design.warnings;
    out.demeaned = true;

    // Keep every column except the intercept.
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < design.column_names.size(); ++c) {
        if (design.column_names[c] == "const") continue;
        cols.push_back(c);
        out.column_names.push_back(design.column_names[c]);
    }

    const auto n = design.n();
    const auto k = cols.size();
    out.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    out.y.resize(static_cast<Eigen::Index>(n));

    // Group rows by author (rows are sorted by author for panel designs, but
    // do not rely on it).
    std::map<AuthorIndex, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < n; ++r) groups[design.row_authors[r]].push_back(r);

    out.panel_authors.reserve(groups.size());
    out.author_mean_y.resize(static_cast<Eigen::Index>(groups.size()));
    out.author_mean_x.resize(static_cast<Eigen::Index>(groups.size()),
                             static_cast<Eigen::Index>(k));

    std::size_t gi = 0;
    for (const auto& [author, members] : groups) {
        if (members.size() < 2) {
            throw numeric_error("author '" + std::to_string(author) +
                                "' has a single panel row; filter before the within transform");
        }
        out.panel_authors.push_back(author);
        const double inv = 1.0 / static_cast<double>(members.size());

        double my = 0.0;
        for (std::size_t r : members) my += design.y[static_cast<Eigen::Index>(r)];
        my *= inv;
        out.author_mean_y[static_cast<Eigen::Index>(gi)] = my;

        for (std::size_t c = 0; c < k; ++c) {
            double mx = 0.0;
            for (std::size_t r : members) {
                mx += design.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(cols[c]));
            }
            mx *= inv;
            out.author_mean_x(static_cast<Eigen::Index>(gi), static_cast<Eigen::Index>(c)) = mx;
            for (std::size_t r : members) {
                out.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    design.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(cols[c])) - mx;
            }
        }
        for (std::size_t r : members) {
            out.y[static_cast<Eigen::Index>(r)] = design.y[static_cast<Eigen::Index>(r)] - my;
        }
        ++gi;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

namespace {

// Gauss-Jordan inverse with partial pivoting over a row-major k x k matrix.
std::vector<double> gauss_jordan_inverse(std::vector<double> a, std::size_t k) {
    std::vector<double> inv(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) inv[i * k + i] = 1.0;

    for (std::size_t col = 0; col < k; ++col) {
        std::size_t pivot = col;
        double best = std::fabs(a[col * k + col]);
        for (std::size_t r = col + 1; r < k; ++r) {
            const double v = std::fabs(a[r * k + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0) throw numeric_error("singular matrix in sandwich bread");
        if (pivot != col) {
            for (std::size_t c = 0; c < k; ++c) {
                std::swap(a[pivot * k + c], a[col * k + c]);
                std::swap(inv[pivot * k + c], inv[col * k + c]);
            }
        }
        const double d = a[col * k + col];
        for (std::size_t c = 0; c < k; ++c) {
            a[col * k + c] /= d;
            inv[col * k + c] /= d;
        }
        for (std::size_t r = 0; r < k; ++r) {
            if (r == col) continue;
            const double f = a[r * k + col];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < k; ++c) {
                a[r * k + c] -= f * a[col * k + c];
                inv[r * k + c] -= f * inv[col * k + c];
            }
        }
    }
    return inv;
}

// X'X accumulated with scalar loops, rows ascending, for bit-reproducible
// sandwich arithmetic.
std::vector<double> cross_product(const Eigen::MatrixXd& X) {
    const auto n = static_cast<std::size_t>(X.rows());
    const auto k = static_cast<std::size_t>(X.cols());
    std::vector<double> a(k * k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t l = j; l < k; ++l) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sum += X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                       X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l));
            }
            a[j * k + l] = sum;
            a[l * k + j] = sum;
        }
    }
    return a;
}

}  // namespace

Eigen::VectorXd clustered_se(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                             const std::vector<std::int64_t>& clusters, std::size_t k_eff) {
    const auto n = static_cast<std::size_t>(X.rows());
    const auto k = static_cast<std::size_t>(X.cols());
    if (clusters.size() != n) throw usage_error("cluster vector length mismatch");

    // Rows grouped by ascending cluster id; within a cluster rows keep their
    // original ascending order.
    std::map<std::int64_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[clusters[i]].push_back(i);
    const auto g = groups.size();
    if (g < 2) throw numeric_error("clustered standard errors need at least 2 clusters");

    const auto bread = gauss_jordan_inverse(cross_product(X), k);

    std::vector<double> meat(k * k, 0.0);
    std::vector<double> v(k, 0.0);
    for (const auto& [id, members] : groups) {
        (void)id;
        for (std::size_t j = 0; j < k; ++j) {
            double sum = 0.0;
            for (std::size_t i : members) {
                sum += X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                       residuals[static_cast<Eigen::Index>(i)];
            }
            v[j] = sum;
        }
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t l = 0; l < k; ++l) {
                meat[j * k + l] += v[j] * v[l];
            }
        }
    }

    const double gd = static_cast<double>(g);
    const double nd = static_cast<double>(n);
    const double c = (gd / (gd - 1.0)) * ((nd - 1.0) / (nd - static_cast<double>(k_eff)));

    // V = c * bread * meat * bread, scalar matmul.
    std::vector<double> bm(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            double sum = 0.0;
            for (std::size_t l = 0; l < k; ++l) sum += bread[i * k + l] * meat[l * k + j];
            bm[i * k + j] = sum;
        }
    }
    Eigen::VectorXd se(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        double sum = 0.0;
        for (std::size_t l = 0; l < k; ++l) sum += bm[i * k + l] * bread[l * k + i];
        se[static_cast<Eigen::Index>(i)] = std::sqrt(c * sum);
    }
    return se;
}

FitResult fit_ols(const DesignMatrix& design, SeType se_type, std::size_t absorbed_effects) {
    const auto n = design.n();
    const auto k = design.k();
    const std::size_t k_eff = k + absorbed_effects;
    if (n <= k_eff) {
        throw numeric_error("not enough rows: n=" + std::to_string(n) +
                            ", effective parameters=" + std::to_string(k_eff));
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.X);
    qr.setThreshold(1e-10);
    const auto rank = static_cast<std::size_t>(qr.rank());
    if (rank < k) {
        // The pivot permutation orders columns by decreasing contribution;
        // everything past the rank is linearly dependent on the rest.
        const auto& perm = qr.colsPermutation().indices();
        std::vector<std::string> collinear;
        for (std::size_t i = rank; i < k; ++i) {
            collinear.push_back(design.column_names[static_cast<std::size_t>(perm[static_cast<Eigen::Index>(i)])]);
        }
        std::string joined;
        for (const auto& c : collinear) {
            if (!joined.empty()) joined += ", ";
            joined += c;
        }
        throw numeric_error("design matrix is rank deficient; collinear columns: " + joined);
    }

    FitResult fit;
    fit.column_names = design.column_names;
    fit.beta = qr.solve(design.y);
    fit.residuals = design.y - design.X * fit.beta;
    fit.n = n;
    fit.k = k;
    fit.k_eff = k_eff;
    fit.se_type = se_type;
    fit.within = design.demeaned;

    const double ssr = fit.residuals.squaredNorm();
    const double ymean = design.y.mean();
    double sst = 0.0;
    for (Eigen::Index i = 0; i < design.y.size(); ++i) {
        const double d = design.y[i] - ymean;
        sst += d * d;
    }
    fit.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 0.0;

    switch (se_type) {
        case SeType::classical: {
            const double s2 = ssr / static_cast<double>(n - k_eff);
            Eigen::MatrixXd xtx_inv =
                (design.X.transpose() * design.X).ldlt().solve(Eigen::MatrixXd::Identity(
                    static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)));
            fit.se = (s2 * xtx_inv.diagonal()).cwiseSqrt();
            fit.dof_residual = static_cast<double>(n - k_eff);
            break;
        }
        case SeType::hc1: {
            // Singleton clusters: the finite-sample factor collapses to
            // n / (n - k_eff), which is exactly HC1.
            std::vector<std::int64_t> singleton(n);
            std::iota(singleton.begin(), singleton.end(), 0);
            fit.se = clustered_se(design.X, fit.residuals, singleton, k_eff);
            fit.dof_residual = static_cast<double>(n - k_eff);
            break;
        }
        case SeType::cluster_author: {
            if (design.row_authors.empty()) {
                throw usage_error("cluster_author SEs require panel rows with authors");
            }
            std::vector<std::int64_t> clusters(n);
            for (std::size_t i = 0; i < n; ++i) clusters[i] = design.row_authors[i];
            std::vector<std::int64_t> distinct = clusters;
            std::sort(distinct.begin(), distinct.end());
            distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
            fit.n_clusters = distinct.size();
            fit.se = clustered_se(design.X, fit.residuals, clusters, k_eff);
            fit.dof_residual = static_cast<double>(fit.n_clusters - 1);
            break;
        }
    }
    return fit;
}

std::vector<CoefficientRow> summarize_fit(const FitResult& fit, double alpha) {
    std::vector<CoefficientRow> rows;
    rows.reserve(fit.column_names.size());
    const double tcrit = t_critical(alpha, fit.dof_residual);
    for (std::size_t c = 0; c < fit.column_names.size(); ++c) {
        CoefficientRow row;
        row.term = fit.column_names[c];
        row.estimate = fit.beta[static_cast<Eigen::Index>(c)];
        row.se = fit.se[static_cast<Eigen::Index>(c)];
        row.ci_low = row.estimate - tcrit * row.se;
        row.ci_high = row.estimate + tcrit * row.se;
        row.p = row.se > 0.0 ? t_p_value(row.estimate / row.se, fit.dof_residual) : 1.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<AuthorEffect> recover_author_effects(const DesignMatrix& within_design,
                                                 const FitResult& fit) {
    if (!within_design.demeaned) {
        throw usage_error("author effects come from a within-transformed design");
    }
    std::vector<AuthorEffect> effects;
    effects.reserve(within_design.panel_authors.size());
    for (std::size_t g = 0; g < within_design.panel_authors.size(); ++g) {
        double a = within_design.author_mean_y[static_cast<Eigen::Index>(g)];
        for (std::size_t c = 0; c < within_design.column_names.size(); ++c) {
            a -= within_design.author_mean_x(static_cast<Eigen::Index>(g),
                                             static_cast<Eigen::Index>(c)) *
                 fit.beta[static_cast<Eigen::Index>(c)];
        }
        effects.push_back({within_design.panel_authors[g], a});
    }
    return effects;
}

FitResult run_model(const Corpus& corpus, const ScoreMatrix& scores, const ModelSpec& spec,
                    const SampleView& sample, const AuthorPaperPanel* panel,
                    DesignMatrix* design_out) {
    if (spec.estimator == Estimator::author_fixed_effects) {
        if (!panel) throw usage_error("author_fixed_effects requires an author-paper panel");
        DesignMatrix design = build_design(corpus, scores, spec, *panel);
        DesignMatrix demeaned = within_transform(design);
        FitResult fit =
            fit_ols(demeaned, SeType::cluster_author, demeaned.panel_authors.size());
        if (design_out) *design_out = std::move(demeaned);
        return fit;
    }
    DesignMatrix design = build_design(corpus, scores, spec, sample);
    FitResult fit = fit_ols(design, spec.se_type);
    if (design_out) *design_out = std::move(design);
    return fit;
}

void write_fit_report(const FitResult& fit, const std::string& model_id, double alpha,
                      const std::filesystem::path& csv_file,
                      const std::filesystem::path& meta_file) {
    {
        std::ofstream out(csv_file);
        if (!out) throw io_error("cannot write '" + csv_file.string() + "'");
        out << "model_id,term,estimate,se,ci_low,ci_high,p\n";
        for (const auto& row : summarize_fit(fit, alpha)) {
            out << model_id << ',' << row.term << ',' << format_double(row.estimate) << ','
                << format_double(row.se) << ',' << format_double(row.ci_low) << ','
                << format_double(row.ci_high) << ',' << format_double(row.p) << '\n';
        }
    }
    {
        nlohmann::json meta;
        meta["model_id"] = model_id;
        meta["n"] = fit.n;
        meta["n_clusters"] = fit.n_clusters;
        meta["r_squared"] = fit.r_squared;
        meta["r_squared_convention"] = fit.within ? "within" : "overall";
        meta["se_type"] = to_string(fit.se_type);
        meta["dof_convention"] =
            fit.se_type == SeType::cluster_author ? "clusters_minus_1" : "n_minus_k_eff";
        meta["dof_residual"] = fit.dof_residual;
        meta["k"] = fit.k;
        meta["k_eff"] = fit.k_eff;
        meta["alpha"] = alpha;
        std::ofstream out(meta_file);
        if (!out) throw io_error("cannot write '" + meta_file.string() + "'");
        out << meta.dump(2) << '\n';
    }
}

}  // namespace specverse
