#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "specverse/corpus.hpp"
#include "specverse/disruption.hpp"
#include "specverse/error.hpp"
#include "specverse/oracle.hpp"
#include "specverse/regress.hpp"
#include "specverse/stats.hpp"

using namespace specverse;

namespace {

DesignMatrix plain_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          std::vector<std::string> names) {
    DesignMatrix design;
    design.X = X;
    design.y = y;
    design.column_names = std::move(names);
    design.row_papers.assign(static_cast<std::size_t>(X.rows()), 0);
    return design;
}

// Corpus of scored papers with controllable DV / covariate structure: papers
// f000.. with refs into a shared pool, one team size each, scores injected
// directly into a matrix.
struct ScoredFixture {
    Corpus corpus;
    ScoreMatrix scores;
    SampleView sample;
    AuthorPaperPanel panel;
    ScoreVariant variant{1, WindowSpec::horizon(2030), NrMode::consistent};
};

ScoredFixture make_scored_fixture(const std::vector<double>& dv,
                                  const std::vector<int>& team,
                                  const std::vector<int>& year,
                                  const std::vector<std::string>& field,
                                  const std::vector<std::vector<std::string>>& authors) {
    Corpus::Builder b;
    const auto n = dv.size();
    auto id_of = [](std::size_t i) {
        std::string s = std::to_string(i);
        return "f" + std::string(3 - std::min<std::size_t>(3, s.size()), '0') + s;
    };
    // a referee pool so every paper can have refs and citers
    b.add_paper("pool0", 1990, "F", 1);
    b.add_paper("pool1", 1990, "F", 1);
    for (std::size_t i = 0; i < n; ++i) {
        b.add_paper(id_of(i), year[i], field[i], team[i]);
        b.add_citation(id_of(i), "pool0");
        b.add_citation(id_of(i), "pool1");
        for (const auto& a : authors[i]) b.add_authorship(id_of(i), a);
    }
    ScoredFixture fx;
    fx.corpus = b.build();

    std::vector<PaperIndex> papers;
    for (std::size_t i = 0; i < n; ++i) papers.push_back(*fx.corpus.find_paper(id_of(i)));
    std::sort(papers.begin(), papers.end());
    fx.scores = ScoreMatrix(papers, {fx.variant});
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = fx.scores.row_of(*fx.corpus.find_paper(id_of(i)));
        fx.scores.cell(*row, 0) = {1, 0, 0, dv[i], ScoreStatus::ok};
    }
    fx.sample.papers = papers;
    if (fx.corpus.has_authorships()) fx.panel = build_panel(fx.sample, fx.corpus, 2);
    return fx;
}

}  // namespace

TEST_CASE("two-point DV standardizes with the sample SD") {
    auto fx = make_scored_fixture({1.0, 3.0}, {2, 3}, {2000, 2000}, {"F", "F"}, {{}, {}});
    ModelSpec spec;
    spec.dv = fx.variant;
    spec.year_dummies = false;
    spec.field_dummies = false;
    const auto design = build_design(fx.corpus, fx.scores, spec, fx.sample);
    REQUIRE(design.y.size() == 2);
    CHECK(design.y[0] == doctest::Approx(-1.0 / std::sqrt(2.0)));
    CHECK(design.y[1] == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(design.dv_sd_raw == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("log reference columns are the log and its square") {
    // refs per paper is fixed at 2 by the fixture; check values directly
    auto fx = make_scored_fixture({1.0, 2.0, 3.0}, {1, 2, 3}, {2000, 2000, 2000},
                                  {"F", "F", "F"}, {{}, {}, {}});
    ModelSpec spec;
    spec.dv = fx.variant;
    spec.year_dummies = false;
    spec.field_dummies = false;
    spec.log_refs = true;
    const auto design = build_design(fx.corpus, fx.scores, spec, fx.sample);
    const auto lr = design.column("log_refs");
    const auto lr2 = design.column("log_refs_sq");
    REQUIRE(lr.has_value());
    REQUIRE(lr2.has_value());
    const double expected = std::log(2.0);
    for (Eigen::Index i = 0; i < design.X.rows(); ++i) {
        CHECK(design.X(i, static_cast<Eigen::Index>(*lr)) == doctest::Approx(expected));
        CHECK(design.X(i, static_cast<Eigen::Index>(*lr2)) == doctest::Approx(expected * expected));
    }
}

TEST_CASE("field dummies use Biology as reference when present") {
    auto fx = make_scored_fixture({1.0, 2.0, 3.0, 4.0}, {1, 2, 3, 4},
                                  {2000, 2000, 2000, 2000},
                                  {"Biology", "Med", "Biology", "Med"}, {{}, {}, {}, {}});
    ModelSpec spec;
    spec.dv = fx.variant;
    spec.year_dummies = false;
    spec.field_dummies = true;
    const auto design = build_design(fx.corpus, fx.scores, spec, fx.sample);
    CHECK(design.column("field_Med").has_value());
    CHECK(!design.column("field_Biology").has_value());
    CHECK(design.reference_levels.at("field") == "Biology");

    SUBCASE("lexicographically first otherwise") {
        auto fx2 = make_scored_fixture({1.0, 2.0, 3.0, 4.0}, {1, 2, 3, 4},
                                       {2000, 2000, 2000, 2000}, {"Bio", "Med", "Bio", "Med"},
                                       {{}, {}, {}, {}});
        const auto d2 = build_design(fx2.corpus, fx2.scores, spec, fx2.sample);
        CHECK(d2.column("field_Med").has_value());
        CHECK(d2.reference_levels.at("field") == "Bio");
    }
}

TEST_CASE("year dummies use the earliest year as reference") {
    auto fx = make_scored_fixture({1.0, 2.0, 3.0, 4.0}, {1, 2, 1, 2},
                                  {2001, 2000, 2001, 2000}, {"F", "F", "F", "F"},
                                  {{}, {}, {}, {}});
    ModelSpec spec;
    spec.dv = fx.variant;
    spec.year_dummies = true;
    spec.field_dummies = false;
    const auto design = build_design(fx.corpus, fx.scores, spec, fx.sample);
    CHECK(design.column("year_2001").has_value());
    CHECK(!design.column("year_2000").has_value());
    CHECK(design.reference_levels.at("year") == "2000");
}

TEST_CASE("degenerate dummy levels merge into the reference with a warning") {
    auto fx = make_scored_fixture({1.0, 2.0, 3.0, 4.0, 5.0}, {1, 1, 1, 1, 1},
                                  {2000, 2000, 2000, 2000, 2001},  // 2001 seen once
                                  {"F", "F", "F", "F", "F"}, {{}, {}, {}, {}, {}});
    ModelSpec spec;
    spec.dv = fx.variant;
    spec.year_dummies = true;
    spec.field_dummies = false;
    spec.team_coding = TeamCoding::continuous;
    const auto design = build_design(fx.corpus, fx.scores, spec, fx.sample);
    CHECK(!design.column("year_2001").has_value());
    REQUIRE(!design.warnings.empty());
    CHECK(design.warnings[0].find("year") != std::string::npos);
}

TEST_CASE("zero-variance DV is a numeric error") {
    auto fx = make_scored_fixture({2.0, 2.0, 2.0}, {1, 2, 3}, {2000, 2000, 2000},
                                  {"F", "F", "F"}, {{}, {}, {}});
    ModelSpec spec;
    spec.dv = fx.variant;
    spec.year_dummies = false;
    spec.field_dummies = false;
    CHECK_THROWS_AS(build_design(fx.corpus, fx.scores, spec, fx.sample), Error);
}

TEST_CASE("team dummies code against size 1") {
    auto fx = make_scored_fixture({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}, {1, 2, 3, 1, 2, 3},
                                  {2000, 2000, 2000, 2000, 2000, 2000},
                                  {"F", "F", "F", "F", "F", "F"}, {{}, {}, {}, {}, {}, {}});
    ModelSpec spec;
    spec.dv = fx.variant;
    spec.year_dummies = false;
    spec.field_dummies = false;
    spec.team_coding = TeamCoding::dummies;
    const auto design = build_design(fx.corpus, fx.scores, spec, fx.sample);
    CHECK(design.column("team_2").has_value());
    CHECK(design.column("team_3").has_value());
    CHECK(!design.column("team_1").has_value());
    CHECK(design.reference_levels.at("team_size") == "1");
}

TEST_CASE("exact line fit") {
    Eigen::MatrixXd X(3, 2);
    X << 1, 0, 1, 1, 1, 2;
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    const auto fit = fit_ols(plain_design(X, y, {"const", "x"}), SeType::classical);
    CHECK(fit.coef("const") == doctest::Approx(1.0));
    CHECK(fit.coef("x") == doctest::Approx(1.0));
    CHECK(fit.r_squared == doctest::Approx(1.0));
}

TEST_CASE("orthogonal centered response has slope zero") {
    Eigen::MatrixXd X(4, 2);
    X << 1, -1, 1, 1, 1, -1, 1, 1;
    Eigen::VectorXd y(4);
    y << 1, 1, -1, -1;  // orthogonal to x and centered
    const auto fit = fit_ols(plain_design(X, y, {"const", "x"}), SeType::classical);
    CHECK(fit.coef("x") == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fit.coef("const") == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("random well-conditioned systems match the normal-equations oracle") {
    std::mt19937_64 rng(123);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 50;
        const int k = 4;
        Eigen::MatrixXd X(n, k);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = 1.0;
            for (int j = 1; j < k; ++j) X(i, j) = noise(rng);
            y(i) = noise(rng);
        }
        const auto fit = fit_ols(plain_design(X, y, {"c", "x1", "x2", "x3"}), SeType::classical);
        const auto ref = oracle::ols_normal_equations(X, y);
        CHECK((fit.beta - ref).norm() / ref.norm() < 1e-8);

        // residual orthogonality
        const Eigen::VectorXd xte = X.transpose() * fit.residuals;
        CHECK(xte.cwiseAbs().maxCoeff() <= 1e-6 * y.norm());
    }
}

TEST_CASE("rank deficiency names the collinear columns") {
    Eigen::MatrixXd X(5, 3);
    for (int i = 0; i < 5; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = i;
        X(i, 2) = 2.0 * i;  // collinear with column 1
    }
    Eigen::VectorXd y(5);
    y << 1, 2, 3, 4, 5;
    try {
        fit_ols(plain_design(X, y, {"const", "x", "x_twice"}), SeType::classical);
        FAIL("expected rank error");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::numeric);
        const std::string msg = e.what();
        CHECK(msg.find("rank deficient") != std::string::npos);
        // one of the two dependent columns must be named
        CHECK((msg.find("x") != std::string::npos));
    }
}

TEST_CASE("within transform demeans by author") {
    // one author, rows y = {1, 3} -> demeaned {-1, 1}
    DesignMatrix design;
    design.X.resize(2, 2);
    design.X << 1, 0.5, 1, 1.5;
    design.y.resize(2);
    design.y << 1, 3;
    design.column_names = {"const", "x"};
    design.row_papers = {0, 1};
    design.row_authors = {7, 7};
    const auto demeaned = within_transform(design);
    CHECK(demeaned.y[0] == doctest::Approx(-1.0));
    CHECK(demeaned.y[1] == doctest::Approx(1.0));
    CHECK(demeaned.column_names == std::vector<std::string>{"x"});
    CHECK(demeaned.X(0, 0) == doctest::Approx(-0.5));
    CHECK(demeaned.X(1, 0) == doctest::Approx(0.5));

    SUBCASE("two identical authors demean identically") {
        DesignMatrix d2;
        d2.X.resize(4, 2);
        d2.X << 1, 0.5, 1, 1.5, 1, 0.5, 1, 1.5;
        d2.y.resize(4);
        d2.y << 1, 3, 1, 3;
        d2.column_names = {"const", "x"};
        d2.row_papers = {0, 1, 2, 3};
        d2.row_authors = {1, 1, 2, 2};
        const auto dm = within_transform(d2);
        CHECK(dm.y[0] == doctest::Approx(dm.y[2]));
        CHECK(dm.y[1] == doctest::Approx(dm.y[3]));
        CHECK(dm.X(0, 0) == doctest::Approx(dm.X(2, 0)));
    }
    SUBCASE("single-row author is an error") {
        DesignMatrix bad;
        bad.X.resize(3, 1);
        bad.X << 1, 1, 1;
        bad.y.resize(3);
        bad.y << 1, 2, 3;
        bad.column_names = {"const"};
        bad.row_papers = {0, 1, 2};
        bad.row_authors = {1, 1, 2};
        CHECK_THROWS_AS(within_transform(bad), Error);
    }
}

TEST_CASE("within slopes equal LSDV on random panels with shared papers") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<int> g_dist(3, 8);
        std::uniform_int_distribution<int> rows_dist(2, 5);
        const int g = g_dist(rng);
        const int k = 2;
        const int pool = 2 * g;

        std::vector<Eigen::Vector2d> px(static_cast<std::size_t>(pool));
        std::vector<double> py(static_cast<std::size_t>(pool));
        for (int p = 0; p < pool; ++p) {
            px[static_cast<std::size_t>(p)] = {noise(rng), noise(rng)};
            py[static_cast<std::size_t>(p)] = noise(rng);
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
        const int n = static_cast<int>(authors.size());
        Eigen::MatrixXd X(n, k);
        Eigen::VectorXd y(n);
        std::vector<double> alpha(static_cast<std::size_t>(g));
        for (auto& a : alpha) a = noise(rng);
        for (int i = 0; i < n; ++i) {
            const auto p = static_cast<std::size_t>(papers[static_cast<std::size_t>(i)]);
            X(i, 0) = px[p][0];
            X(i, 1) = px[p][1];
            y(i) = py[p] + alpha[static_cast<std::size_t>(authors[static_cast<std::size_t>(i)])];
        }

        DesignMatrix design;
        design.X.resize(n, k + 1);
        design.X.col(0).setOnes();
        design.X.rightCols(k) = X;
        design.y = y;
        design.column_names = {"const", "x0", "x1"};
        design.row_papers.assign(static_cast<std::size_t>(n), 0);
        design.row_authors.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            design.row_authors[static_cast<std::size_t>(i)] =
                static_cast<AuthorIndex>(authors[static_cast<std::size_t>(i)]);
        }
        const auto demeaned = within_transform(design);
        const auto fit = fit_ols(demeaned, SeType::classical, demeaned.panel_authors.size());
        const auto ref = oracle::lsdv_slopes(X, y, authors);
        CHECK((fit.beta - ref).norm() / std::max(1e-12, ref.norm()) < 1e-6);
    }
}

TEST_CASE("clustered SEs") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> noise(0.0, 1.0);

    SUBCASE("singleton clusters reduce exactly to HC1") {
        const int n = 40;
        Eigen::MatrixXd X(n, 2);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = noise(rng);
            y(i) = 0.5 * X(i, 1) + noise(rng);
        }
        const auto design = plain_design(X, y, {"const", "x"});
        const auto hc1 = fit_ols(design, SeType::hc1);
        // explicit singleton clusters through the public clustered_se
        std::vector<std::int64_t> singleton(n);
        std::iota(singleton.begin(), singleton.end(), 100);
        const auto se = clustered_se(X, hc1.residuals, singleton, 2);
        CHECK(se[0] == hc1.se[0]);
        CHECK(se[1] == hc1.se[1]);
    }

    SUBCASE("hand formula on a 4x2 system") {
        Eigen::MatrixXd X(4, 2);
        X << 1, 0, 1, 1, 1, 2, 1, 3;
        Eigen::VectorXd e(4);
        e << 0.5, -0.5, 0.25, -0.25;
        std::vector<std::int64_t> clusters = {0, 0, 1, 1};
        const auto se = clustered_se(X, e, clusters, 2);

        // brutearithmetic: bread = (X'X)^-1, meat = sum_g v_g v_g'
        Eigen::Matrix2d xtx = X.transpose() * X;
        Eigen::Matrix2d bread = xtx.inverse();
        Eigen::Vector2d v0 = X.row(0).transpose() * e(0) + X.row(1).transpose() * e(1);
        Eigen::Vector2d v1 = X.row(2).transpose() * e(2) + X.row(3).transpose() * e(3);
        Eigen::Matrix2d meat = v0 * v0.transpose() + v1 * v1.transpose();
        const double c = (2.0 / 1.0) * (3.0 / 2.0);
        Eigen::Matrix2d V = c * bread * meat * bread;
        CHECK(se[0] == doctest::Approx(std::sqrt(V(0, 0))).epsilon(1e-12));
        CHECK(se[1] == doctest::Approx(std::sqrt(V(1, 1))).epsilon(1e-12));
    }

    SUBCASE("matches the independent sandwich oracle exactly") {
        for (int trial = 0; trial < 20; ++trial) {
            const int n = 60;
            const int g = 6;
            Eigen::MatrixXd X(n, 3);
            Eigen::VectorXd e(n);
            std::vector<std::int64_t> clusters(static_cast<std::size_t>(n));
            std::uniform_int_distribution<int> cdist(0, g - 1);
            for (int i = 0; i < n; ++i) {
                X(i, 0) = 1.0;
                X(i, 1) = noise(rng);
                X(i, 2) = noise(rng);
                e(i) = noise(rng);
                clusters[static_cast<std::size_t>(i)] = cdist(rng);
            }
            const auto fast = clustered_se(X, e, clusters, 3);
            const auto brute = oracle::sandwich_se_brute(X, e, clusters, 3);
            for (int j = 0; j < 3; ++j) {
                CHECK(fast[j] == brute[static_cast<std::size_t>(j)]);
            }
        }
    }

    SUBCASE("homoskedastic independent clusters: clustered close to classical") {
        const int n = 200;
        const int g = 50;
        Eigen::MatrixXd X(n, 2);
        Eigen::VectorXd y(n);
        std::vector<std::int64_t> clusters(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = noise(rng);
            y(i) = 1.0 + 0.5 * X(i, 1) + noise(rng);
            clusters[static_cast<std::size_t>(i)] = i % g;
        }
        const auto design = plain_design(X, y, {"const", "x"});
        const auto classical = fit_ols(design, SeType::classical);
        const auto se = clustered_se(X, classical.residuals, clusters, 2);
        for (int j = 0; j < 2; ++j) {
            CHECK(std::fabs(se[j] / classical.se[j] - 1.0) < 0.25);
        }
    }

    SUBCASE("duplicating every row leaves coefficients unchanged") {
        const int n = 30;
        Eigen::MatrixXd X(n, 2);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = noise(rng);
            y(i) = 2.0 - 0.7 * X(i, 1) + noise(rng);
        }
        Eigen::MatrixXd X2(2 * n, 2);
        Eigen::VectorXd y2(2 * n);
        X2 << X, X;
        y2 << y, y;
        const auto fit1 = fit_ols(plain_design(X, y, {"const", "x"}), SeType::classical);
        const auto fit2 = fit_ols(plain_design(X2, y2, {"const", "x"}), SeType::classical);
        CHECK(fit1.coef("x") == doctest::Approx(fit2.coef("x")).epsilon(1e-12));
        CHECK(fit1.coef("const") == doctest::Approx(fit2.coef("const")).epsilon(1e-12));
    }

    SUBCASE("a single cluster is an error") {
        Eigen::MatrixXd X(4, 1);
        X << 1, 1, 1, 1;
        Eigen::VectorXd e(4);
        e << 1, -1, 1, -1;
        std::vector<std::int64_t> clusters = {3, 3, 3, 3};
        CHECK_THROWS_AS(clustered_se(X, e, clusters, 1), Error);
    }
}

TEST_CASE("summarize_fit p-values and intervals") {
    SUBCASE("estimate zero gives p = 1") {
        FitResult fit;
        fit.column_names = {"x"};
        fit.beta.resize(1);
        fit.beta << 0.0;
        fit.se.resize(1);
        fit.se << 0.5;
        fit.dof_residual = 100;
        const auto rows = summarize_fit(fit, 0.05);
        CHECK(rows[0].p == doctest::Approx(1.0));
    }
    SUBCASE("estimate at 1.96 SE with large dof gives p near 0.05") {
        FitResult fit;
        fit.column_names = {"x"};
        fit.beta.resize(1);
        fit.beta << 1.96;
        fit.se.resize(1);
        fit.se << 1.0;
        fit.dof_residual = 100000;
        const auto rows = summarize_fit(fit, 0.05);
        CHECK(std::fabs(rows[0].p - 0.05) < 0.005);
    }
    SUBCASE("five clusters use t(4) quantiles, wider than normal") {
        FitResult fit;
        fit.column_names = {"x"};
        fit.beta.resize(1);
        fit.beta << 1.0;
        fit.se.resize(1);
        fit.se << 1.0;
        fit.n_clusters = 5;
        fit.dof_residual = 4;
        const auto rows = summarize_fit(fit, 0.05);
        const double half_width = rows[0].ci_high - rows[0].estimate;
        CHECK(half_width > 1.96);           // wider than the normal interval
        CHECK(half_width == doctest::Approx(t_critical(0.05, 4)).epsilon(1e-10));
    }
}

TEST_CASE("author effect recovery") {
    SUBCASE("no covariates: effects are the author means") {
        DesignMatrix design;
        design.X.resize(4, 1);
        design.X.setOnes();
        design.y.resize(4);
        design.y << 0.1, 0.3, -0.1, -0.3;
        design.column_names = {"const"};
        design.row_papers = {0, 1, 2, 3};
        design.row_authors = {1, 1, 2, 2};
        const auto demeaned = within_transform(design);
        FitResult fit;
        fit.column_names = demeaned.column_names;
        fit.beta.resize(0);
        const auto effects = recover_author_effects(demeaned, fit);
        REQUIRE(effects.size() == 2);
        CHECK(effects[0].alpha_hat == doctest::Approx(0.2));
        CHECK(effects[1].alpha_hat == doctest::Approx(-0.2));
    }
    SUBCASE("adding a constant shifts every effect, slopes unchanged") {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> noise(0.0, 1.0);
        const int n = 24;
        DesignMatrix design;
        design.X.resize(n, 2);
        design.y.resize(n);
        design.column_names = {"const", "x"};
        design.row_papers.assign(n, 0);
        design.row_authors.resize(n);
        for (int i = 0; i < n; ++i) {
            design.X(i, 0) = 1.0;
            design.X(i, 1) = noise(rng);
            design.y(i) = 0.4 * design.X(i, 1) + noise(rng);
            design.row_authors[static_cast<std::size_t>(i)] = i / 4;
        }
        const auto demeaned = within_transform(design);
        const auto fit = fit_ols(demeaned, SeType::classical, demeaned.panel_authors.size());
        const auto effects = recover_author_effects(demeaned, fit);

        DesignMatrix shifted = design;
        shifted.y.array() += 5.0;
        const auto demeaned2 = within_transform(shifted);
        const auto fit2 = fit_ols(demeaned2, SeType::classical, demeaned2.panel_authors.size());
        const auto effects2 = recover_author_effects(demeaned2, fit2);

        CHECK(fit.beta[0] == doctest::Approx(fit2.beta[0]).epsilon(1e-12));
        for (std::size_t g = 0; g < effects.size(); ++g) {
            CHECK(effects2[g].alpha_hat - effects[g].alpha_hat == doctest::Approx(5.0));
        }
    }
    SUBCASE("LSDV dummies equal recovered effects up to a constant") {
        std::mt19937_64 rng(11);
        std::normal_distribution<double> noise(0.0, 1.0);
        const int g = 4;
        const int per = 3;
        const int n = g * per;
        Eigen::MatrixXd X(n, 1);
        Eigen::VectorXd y(n);
        std::vector<std::int64_t> authors(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            X(i, 0) = noise(rng);
            authors[static_cast<std::size_t>(i)] = i / per;
            y(i) = 0.8 * X(i, 0) + 0.5 * (i / per) + noise(rng);
        }
        DesignMatrix design;
        design.X.resize(n, 2);
        design.X.col(0).setOnes();
        design.X.col(1) = X.col(0);
        design.y = y;
        design.column_names = {"const", "x"};
        design.row_papers.assign(static_cast<std::size_t>(n), 0);
        design.row_authors.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            design.row_authors[static_cast<std::size_t>(i)] =
                static_cast<AuthorIndex>(authors[static_cast<std::size_t>(i)]);
        }
        const auto demeaned = within_transform(design);
        const auto fit = fit_ols(demeaned, SeType::classical, demeaned.panel_authors.size());
        const auto effects = recover_author_effects(demeaned, fit);

        // LSDV with intercept + g-1 dummies: dummy_j = alpha_j - alpha_0
        Eigen::MatrixXd full(n, 1 + 1 + (g - 1));
        full.setZero();
        full.col(0).setOnes();
        full.col(1) = X.col(0);
        for (int i = 0; i < n; ++i) {
            const auto a = authors[static_cast<std::size_t>(i)];
            if (a > 0) full(i, static_cast<Eigen::Index>(1 + a)) = 1.0;
        }
        const auto lsdv = oracle::ols_normal_equations(full, y);
        for (int a = 1; a < g; ++a) {
            const double dummy = lsdv[static_cast<Eigen::Index>(1 + a)];
            const double diff = effects[static_cast<std::size_t>(a)].alpha_hat -
                                effects[0].alpha_hat;
            CHECK(dummy == doctest::Approx(diff).epsilon(1e-8));
        }
    }
}

TEST_CASE("row permutation changes nothing (canonical internal order)") {
    auto fx = make_scored_fixture(
        {0.1, -0.2, 0.4, 0.0, -0.5, 0.3}, {1, 2, 3, 4, 2, 1},
        {2000, 2001, 2000, 2001, 2000, 2001}, {"F", "G", "G", "F", "F", "G"},
        {{"a1", "a2"}, {"a1"}, {"a2"}, {"a1"}, {"a2"}, {"a1", "a2"}});
    ModelSpec spec;
    spec.dv = fx.variant;
    spec.year_dummies = true;
    spec.field_dummies = true;
    const auto fit1 = run_model(fx.corpus, fx.scores, spec, fx.sample, &fx.panel);

    SampleView shuffled = fx.sample;
    std::reverse(shuffled.papers.begin(), shuffled.papers.end());
    std::sort(shuffled.papers.begin(), shuffled.papers.end());  // contract: ascending
    const auto fit2 = run_model(fx.corpus, fx.scores, spec, shuffled, &fx.panel);
    for (Eigen::Index j = 0; j < fit1.beta.size(); ++j) {
        CHECK(fit1.beta[j] == fit2.beta[j]);
        CHECK(fit1.se[j] == fit2.se[j]);
    }
}

TEST_CASE("standardization invariance: scaling the DV changes nothing") {
    auto fx = make_scored_fixture(
        {0.1, -0.2, 0.4, 0.0, -0.5, 0.3, 0.25, -0.15}, {1, 2, 3, 4, 2, 1, 3, 2},
        {2000, 2001, 2000, 2001, 2000, 2001, 2000, 2001},
        {"F", "F", "F", "F", "F", "F", "F", "F"},
        {{"a1", "a2"}, {"a1"}, {"a2"}, {"a3"}, {"a3"}, {"a1", "a2"}, {"a3"}, {"a2"}});
    ModelSpec spec;
    spec.dv = fx.variant;
    spec.year_dummies = true;
    spec.field_dummies = false;

    const auto fit1 = run_model(fx.corpus, fx.scores, spec, fx.sample, &fx.panel);

    ScoredFixture scaled = fx;
    for (std::size_t row = 0; row < scaled.scores.papers().size(); ++row) {
        scaled.scores.cell(row, 0).value *= 100.0;
    }
    const auto fit2 = run_model(scaled.corpus, scaled.scores, spec, scaled.sample, &scaled.panel);
    const auto rows1 = summarize_fit(fit1, 0.05);
    const auto rows2 = summarize_fit(fit2, 0.05);
    REQUIRE(rows1.size() == rows2.size());
    for (std::size_t i = 0; i < rows1.size(); ++i) {
        CHECK(rows1[i].estimate == doctest::Approx(rows2[i].estimate).epsilon(1e-12));
        CHECK(rows1[i].se == doctest::Approx(rows2[i].se).epsilon(1e-12));
        CHECK(rows1[i].p == doctest::Approx(rows2[i].p).epsilon(1e-10));
    }
}

TEST_CASE("fixed-effects model end to end clusters by author") {
    auto fx = make_scored_fixture(
        {0.1, -0.2, 0.4, 0.0, -0.5, 0.3, 0.25, -0.15}, {1, 2, 3, 4, 2, 1, 3, 2},
        {2000, 2001, 2000, 2001, 2000, 2001, 2000, 2001},
        {"F", "F", "F", "F", "F", "F", "F", "F"},
        {{"a1"}, {"a1"}, {"a2"}, {"a2"}, {"a3"}, {"a3"}, {"a1"}, {"a2"}});
    ModelSpec spec;
    spec.dv = fx.variant;
    spec.estimator = Estimator::author_fixed_effects;
    spec.year_dummies = true;
    spec.field_dummies = false;
    DesignMatrix design;
    const auto fit = run_model(fx.corpus, fx.scores, spec, fx.sample, &fx.panel, &design);
    CHECK(fit.within);
    CHECK(fit.n_clusters == 3);
    CHECK(fit.se_type == SeType::cluster_author);
    CHECK(fit.dof_residual == doctest::Approx(2.0));  // G - 1
    CHECK(fit.column("team_size").has_value());
    CHECK(!fit.column("const").has_value());
    CHECK(fit.k_eff == fit.k + 3);
}

TEST_CASE("fit report writes delimited rows and metadata") {
    Eigen::MatrixXd X(6, 2);
    Eigen::VectorXd y(6);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < 6; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = i;
        y(i) = 0.5 * i + noise(rng);
    }
    const auto fit = fit_ols(plain_design(X, y, {"const", "x"}), SeType::classical);
    const auto dir = std::filesystem::temp_directory_path() / "specverse_test_fit_report";
    std::filesystem::create_directories(dir);
    write_fit_report(fit, "toy", 0.05, dir / "coef.csv", dir / "meta.json");
    std::ifstream csv(dir / "coef.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "model_id,term,estimate,se,ci_low,ci_high,p");
    std::string line;
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 2);
    std::ifstream meta(dir / "meta.json");
    std::string meta_text((std::istreambuf_iterator<char>(meta)), std::istreambuf_iterator<char>());
    CHECK(meta_text.find("\"se_type\"") != std::string::npos);
    CHECK(meta_text.find("\"r_squared\"") != std::string::npos);
}
