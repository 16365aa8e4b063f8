#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "specverse/corpus.hpp"
#include "specverse/disruption.hpp"
#include "specverse/error.hpp"

using namespace specverse;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("specverse_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& file, const std::string& content) {
    std::ofstream out(file);
    out << content;
}

Corpus three_paper_fixture() {
    Corpus::Builder b;
    b.add_paper("FP", 2000, "Bio", 3);
    b.add_paper("citer", 2001, "Bio", 2);
    b.add_paper("ref", 1999, "Med", 1);
    b.add_citation("citer", "FP");
    b.add_citation("FP", "ref");
    b.add_authorship("FP", "a1");
    b.add_authorship("citer", "a1");
    return b.build();
}

}  // namespace

TEST_CASE("three-paper fixture loads with both indices") {
    const Corpus corpus = three_paper_fixture();
    CHECK(corpus.paper_count() == 3);
    CHECK(corpus.citation_edge_count() == 2);

    const auto fp = corpus.find_paper("FP");
    REQUIRE(fp.has_value());
    const auto citer = corpus.find_paper("citer");
    REQUIRE(citer.has_value());

    const auto fp_citers = corpus.citers(*fp);
    REQUIRE(fp_citers.size() == 1);
    CHECK(fp_citers[0] == *citer);

    const auto fp_refs = corpus.references(*fp);
    REQUIRE(fp_refs.size() == 1);
    CHECK(corpus.paper(fp_refs[0]).id == "ref");
}

TEST_CASE("team_size 0 is rejected naming the row") {
    const auto dir = temp_dir("team0");
    write_file(dir / "papers.csv", "id,year,field,team_size\np1,2000,Bio,0\n");
    write_file(dir / "citations.csv", "citing_id,cited_id\n");
    write_file(dir / "authorships.csv", "paper_id,author_id\n");
    try {
        load_corpus_dir(dir);
        FAIL("expected validation error");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::validation);
        CHECK(std::string(e.what()).find("p1") != std::string::npos);
        CHECK(std::string(e.what()).find(":2") != std::string::npos);  // line number
    }
}

TEST_CASE("unresolved cited_id increments n_refs_unlinked when the column is absent") {
    const auto dir = temp_dir("unlinked");
    write_file(dir / "papers.csv", "id,year,field,team_size\np1,2000,Bio,1\np2,2001,Bio,1\n");
    write_file(dir / "citations.csv", "citing_id,cited_id\np2,p1\np2,X9\n");
    write_file(dir / "authorships.csv", "paper_id,author_id\n");
    LoadReport report;
    const Corpus corpus = load_corpus(dir / "papers.csv", dir / "citations.csv",
                                      dir / "authorships.csv", std::nullopt, {}, &report);
    const auto p2 = corpus.find_paper("p2");
    REQUIRE(p2.has_value());
    CHECK(corpus.paper(*p2).n_refs_unlinked == 1);
    CHECK(corpus.references(*p2).size() == 1);  // edge to X9 dropped
    CHECK(report.unlinked_refs_dropped == 1);

    SUBCASE("but not when the papers file carries its own counts") {
        write_file(dir / "papers.csv",
                   "id,year,field,team_size,n_refs_unlinked\np1,2000,Bio,1,0\np2,2001,Bio,1,7\n");
        const Corpus c2 = load_corpus_dir(dir);
        CHECK(c2.paper(*c2.find_paper("p2")).n_refs_unlinked == 7);
        CHECK(c2.references(*c2.find_paper("p2")).size() == 1);
    }
}

TEST_CASE("loader hard errors") {
    const auto dir = temp_dir("harderr");
    write_file(dir / "citations.csv", "citing_id,cited_id\n");
    write_file(dir / "authorships.csv", "paper_id,author_id\n");

    SUBCASE("duplicate paper id") {
        write_file(dir / "papers.csv", "id,year,field,team_size\np1,2000,Bio,1\np1,2001,Bio,1\n");
        CHECK_THROWS_AS(load_corpus_dir(dir), Error);
    }
    SUBCASE("unknown citing id") {
        write_file(dir / "papers.csv", "id,year,field,team_size\np1,2000,Bio,1\n");
        write_file(dir / "citations.csv", "citing_id,cited_id\nghost,p1\n");
        CHECK_THROWS_AS(load_corpus_dir(dir), Error);
    }
    SUBCASE("self citation") {
        write_file(dir / "papers.csv", "id,year,field,team_size\np1,2000,Bio,1\n");
        write_file(dir / "citations.csv", "citing_id,cited_id\np1,p1\n");
        CHECK_THROWS_AS(load_corpus_dir(dir), Error);
    }
    SUBCASE("malformed row reports file and line") {
        write_file(dir / "papers.csv", "id,year,field,team_size\np1,2000,Bio,1\np2,abc,Bio,1\n");
        try {
            load_corpus_dir(dir);
            FAIL("expected schema error");
        } catch (const Error& e) {
            CHECK(e.category() == ErrorCategory::schema);
            CHECK(std::string(e.what()).find("papers.csv:3") != std::string::npos);
        }
    }
    SUBCASE("year outside a declared range") {
        write_file(dir / "papers.csv", "id,year,field,team_size\np1,1980,Bio,1\n");
        LoadOptions options;
        options.year_range = {{2000, 2005}};
        CHECK_THROWS_AS(load_corpus(dir / "papers.csv", dir / "citations.csv",
                                    dir / "authorships.csv", std::nullopt, options),
                        Error);
    }
}

TEST_CASE("team size derived from authorships when the column is absent") {
    const auto dir = temp_dir("derived");
    write_file(dir / "papers.csv", "id,year,field\np1,2000,Bio\n");
    write_file(dir / "citations.csv", "citing_id,cited_id\n");
    write_file(dir / "authorships.csv", "paper_id,author_id\np1,a1\np1,a2\np1,a3\n");
    const Corpus corpus = load_corpus_dir(dir);
    CHECK(corpus.paper(*corpus.find_paper("p1")).team_size == 3);
}

TEST_CASE("field map recodes categories") {
    const auto dir = temp_dir("fieldmap");
    write_file(dir / "papers.csv", "id,year,field,team_size\np1,2000,Genetics,1\np2,2000,Algebra,1\n");
    write_file(dir / "citations.csv", "citing_id,cited_id\n");
    write_file(dir / "authorships.csv", "paper_id,author_id\n");
    write_file(dir / "map.csv", "category,major_field\nGenetics,Biology\n");
    const Corpus corpus = load_corpus(dir / "papers.csv", dir / "citations.csv",
                                      dir / "authorships.csv", dir / "map.csv");
    const auto& p1 = corpus.paper(*corpus.find_paper("p1"));
    const auto& p2 = corpus.paper(*corpus.find_paper("p2"));
    CHECK(corpus.field_names()[static_cast<std::size_t>(p1.field)] == "Biology");
    // unmapped categories pass through unchanged
    CHECK(corpus.field_names()[static_cast<std::size_t>(p2.field)] == "Algebra");
}

TEST_CASE("tab-delimited input is accepted") {
    const auto dir = temp_dir("tabs");
    write_file(dir / "papers.csv", "id\tyear\tfield\tteam_size\np1\t2000\tBio\t2\n");
    write_file(dir / "citations.csv", "citing_id\tcited_id\n");
    write_file(dir / "authorships.csv", "paper_id\tauthor_id\n");
    const Corpus corpus = load_corpus_dir(dir);
    CHECK(corpus.paper(0).team_size == 2);
}

namespace {

// 14 papers: r0..r5 cited referees with no refs, s0/s1 uncited papers citing
// 3 referees each, c0..c5 citing 10 papers each (all referees plus other c's).
Corpus filter_fixture() {
    Corpus::Builder b;
    auto rid = [](int i) { return "r" + std::to_string(i); };
    auto cid = [](int i) { return "c" + std::to_string(i); };
    for (int i = 0; i < 6; ++i) b.add_paper(rid(i), 1999, "Bio", 1);
    b.add_paper("s0", 2000, "Med", 2);
    b.add_paper("s1", 2001, "Bio", 3);
    for (int i = 0; i < 6; ++i) {
        b.add_paper(cid(i), 2000 + (i % 3), i % 2 ? "Med" : "Bio", 1 + i % 4);
    }
    for (int t = 0; t < 3; ++t) {
        b.add_citation("s0", rid(t));
        b.add_citation("s1", rid(t));
    }
    for (int i = 0; i < 6; ++i) {
        for (int t = 0; t < 6; ++t) b.add_citation(cid(i), rid(t));
        for (int step = 1; step <= 4; ++step) b.add_citation(cid(i), cid((i + step) % 6));
    }
    for (int i = 0; i < 6; ++i) b.add_authorship(rid(i), "a" + std::to_string(i % 3));
    b.add_authorship("s0", "a0");
    b.add_authorship("s1", "a1");
    for (int i = 0; i < 6; ++i) b.add_authorship(cid(i), "a" + std::to_string(i % 3));
    return b.build();
}

}  // namespace

TEST_CASE("min_refs filter removes short reference lists with provenance") {
    const Corpus corpus = filter_fixture();
    FilterSpec spec;
    spec.min_refs = 10;
    spec.require_cited = false;
    spec.min_papers_per_author = 0;
    const auto view = apply_filters(corpus, spec);
    // r0..r5 have 0 refs, s0/s1 have 3 refs
    CHECK(view.provenance.min_refs == 8);
    CHECK(view.papers.size() == 6);
}

TEST_CASE("uncited papers are removed when require_cited is on") {
    const Corpus corpus = filter_fixture();
    FilterSpec spec;
    spec.min_refs = 0;
    spec.require_cited = true;
    spec.min_papers_per_author = 0;
    const auto view = apply_filters(corpus, spec);
    CHECK(view.provenance.uncited == 2);  // s0 and s1
    for (PaperIndex p : view.papers) {
        CHECK(!corpus.citers(p).empty());
    }
}

TEST_CASE("outlier filter removes heavy reference lists") {
    Corpus::Builder b;
    b.add_paper("big", 2000, "Bio", 1);
    b.add_paper("ok", 2000, "Bio", 1);
    for (int i = 0; i < 250; ++i) b.add_paper("t" + std::to_string(i), 1999, "Bio", 1);
    for (int i = 0; i < 250; ++i) b.add_citation("big", "t" + std::to_string(i));
    for (int i = 0; i < 12; ++i) b.add_citation("ok", "t" + std::to_string(i));
    const Corpus corpus = b.build();

    FilterSpec spec;
    spec.min_refs = 0;
    spec.require_cited = false;
    spec.min_papers_per_author = 0;
    spec.outlier_max_refs = 200;
    const auto view = apply_filters(corpus, spec, WindowSpec::years(5));
    CHECK(view.provenance.outliers == 1);
    CHECK(!view.contains(*corpus.find_paper("big")));
    CHECK(view.contains(*corpus.find_paper("ok")));
}

TEST_CASE("filters reach a fixpoint and tightening never grows the sample") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Corpus::Builder b;
        const int n = 30;
        std::uniform_int_distribution<int> year(2000, 2006);
        std::uniform_int_distribution<int> team(1, 5);
        std::uniform_int_distribution<int> node(0, n - 1);
        auto id_of = [](int i) { return "p" + std::to_string(100 + i); };
        for (int i = 0; i < n; ++i) b.add_paper(id_of(i), year(rng), "F", team(rng));
        std::set<std::pair<int, int>> seen;
        for (int e = 0; e < 3 * n; ++e) {
            const int a = node(rng);
            const int t = node(rng);
            if (a == t || !seen.insert({a, t}).second) continue;
            b.add_citation(id_of(a), id_of(t));
        }
        std::uniform_int_distribution<int> author(0, 9);
        for (int i = 0; i < n; ++i) {
            b.add_authorship(id_of(i), "a" + std::to_string(author(rng)));
        }
        const Corpus corpus = b.build();

        FilterSpec spec;
        spec.min_refs = 2;
        spec.require_cited = true;
        spec.min_papers_per_author = 2;

        const auto once = apply_filters(corpus, spec);

        // Fixpoint: every retained paper passes every filter evaluated on the
        // retained set itself.
        std::vector<std::int64_t> author_counts(corpus.author_count(), 0);
        for (PaperIndex p : once.papers) {
            for (AuthorIndex a : corpus.authors_of_paper(p)) {
                author_counts[static_cast<std::size_t>(a)]++;
            }
        }
        for (PaperIndex p : once.papers) {
            CHECK(static_cast<int>(corpus.references(p).size()) >= spec.min_refs);
            CHECK(!corpus.citers(p).empty());
            bool has_author = false;
            for (AuthorIndex a : corpus.authors_of_paper(p)) {
                if (author_counts[static_cast<std::size_t>(a)] >= 2) has_author = true;
            }
            CHECK(has_author);
        }
        CHECK(once.provenance.total_removed() == corpus.paper_count() - once.papers.size());

        // Monotonicity: tightening any single threshold never grows the sample.
        FilterSpec tighter = spec;
        tighter.min_refs = 3;
        CHECK(apply_filters(corpus, tighter).papers.size() <= once.papers.size());
        tighter = spec;
        tighter.min_papers_per_author = 3;
        CHECK(apply_filters(corpus, tighter).papers.size() <= once.papers.size());
    }
}

TEST_CASE("panel duplicates shared papers and drops thin authors") {
    Corpus::Builder b;
    b.add_paper("p1", 2000, "F", 1);
    b.add_paper("p2", 2000, "F", 2);
    b.add_paper("p3", 2000, "F", 1);
    b.add_authorship("p1", "a1");
    b.add_authorship("p2", "a1");
    b.add_authorship("p2", "a2");
    b.add_authorship("p3", "a2");
    const Corpus corpus = b.build();

    const auto sample = SampleView::all_of(corpus);
    const auto panel = build_panel(sample, corpus, 2);
    CHECK(panel.rows.size() == 4);  // p2 appears under both authors
    CHECK(panel.authors.size() == 2);

    std::size_t p2_rows = 0;
    for (const auto& row : panel.rows) {
        if (corpus.paper(row.paper).id == "p2") ++p2_rows;
    }
    CHECK(p2_rows == 2);

    SUBCASE("author below the threshold is absent") {
        const auto strict = build_panel(sample, corpus, 3);
        CHECK(strict.rows.empty());
    }
    SUBCASE("panel row count equals the sum over authors of retained papers") {
        std::size_t total = 0;
        for (AuthorIndex a : panel.authors) {
            for (PaperIndex p : corpus.papers_of_author(a)) {
                total += sample.contains(p) ? 1 : 0;
            }
        }
        CHECK(total == panel.rows.size());
    }
}

TEST_CASE("panel on a corpus without authorships is a validation error") {
    Corpus::Builder b;
    b.add_paper("p1", 2000, "F", 1);
    const Corpus corpus = b.build();
    CHECK_THROWS_AS(build_panel(SampleView::all_of(corpus), corpus, 2), Error);
}

TEST_CASE("descriptive stats") {
    Corpus::Builder b;
    b.add_paper("p1", 2000, "Bio", 4);
    b.add_paper("p2", 2001, "Bio", 4);
    b.add_paper("p3", 2002, "Med", 4);
    b.add_paper("p4", 2003, "Chem", 4);
    const Corpus corpus = b.build();
    const auto sample = SampleView::all_of(corpus);

    SUBCASE("constant variable has SD 0") {
        const auto stats = descriptive_stats(corpus, sample, {"team_size"}, false);
        CHECK(stats.variables[0].sd == doctest::Approx(0.0));
        CHECK(stats.variables[0].mean == doctest::Approx(4.0));
    }
    SUBCASE("field distribution is 50/25/25") {
        const auto stats = descriptive_stats(corpus, sample, {}, false);
        REQUIRE(stats.field_distribution.size() == 3);
        std::map<std::string, double> shares;
        for (const auto& f : stats.field_distribution) shares[f.field] = f.percent;
        CHECK(shares["Bio"] == doctest::Approx(50.0));
        CHECK(shares["Med"] == doctest::Approx(25.0));
        CHECK(shares["Chem"] == doctest::Approx(25.0));
    }
    SUBCASE("unknown variable errors") {
        CHECK_THROWS_AS(descriptive_stats(corpus, sample, {"nope"}, false), Error);
    }
}

TEST_CASE("di variables scale by 100 in descriptive stats") {
    Corpus::Builder b;
    b.add_paper("p1", 2000, "Bio", 1);
    b.add_paper("p2", 2000, "Bio", 1);
    const Corpus corpus = b.build();

    std::vector<PaperIndex> papers = {*corpus.find_paper("p1"), *corpus.find_paper("p2")};
    std::sort(papers.begin(), papers.end());
    const ScoreVariant variant{1, WindowSpec::horizon(2023), NrMode::consistent};
    ScoreMatrix matrix(papers, {variant});
    matrix.cell(0, 0) = {1, 2, 1, -0.5, ScoreStatus::ok};
    matrix.cell(1, 0) = {3, 1, 0, 0.5, ScoreStatus::ok};

    SampleView sample;
    sample.papers = papers;
    const auto stats =
        descriptive_stats(corpus, sample, {"di:1:horizon:2023:consistent"}, true, &matrix);
    CHECK(stats.variables[0].min == doctest::Approx(-50.0));
    CHECK(stats.variables[0].max == doctest::Approx(50.0));
    CHECK(stats.variables[0].mean == doctest::Approx(0.0));
}

TEST_CASE("corpus round-trips through CSV and binary") {
    std::mt19937_64 rng(99);
    Corpus::Builder b;
    const int n = 40;
    std::uniform_int_distribution<int> year(2000, 2008);
    std::uniform_int_distribution<int> team(1, 6);
    std::uniform_int_distribution<int> node(0, n - 1);
    auto id_of = [](int i) { return "p" + std::to_string(500 + i); };
    for (int i = 0; i < n; ++i) {
        b.add_paper(id_of(i), year(rng), i % 3 ? "Bio" : "Med", team(rng), i % 5 == 0 ? 1 : 0);
    }
    std::set<std::pair<int, int>> seen;
    for (int e = 0; e < 4 * n; ++e) {
        const int a = node(rng);
        const int t = node(rng);
        if (a == t || !seen.insert({a, t}).second) continue;
        b.add_citation(id_of(a), id_of(t));
    }
    for (int i = 0; i < n; ++i) {
        b.add_authorship(id_of(i), "auth" + std::to_string(i % 11));
        if (i % 2) b.add_authorship(id_of(i), "auth" + std::to_string((i + 3) % 11));
    }
    b.set_unlinked_counts_from_input(true);
    const Corpus corpus = b.build();

    SUBCASE("csv") {
        const auto dir = temp_dir("roundtrip_csv");
        export_corpus_csv(corpus, dir);
        const Corpus reloaded = load_corpus_dir(dir);
        CHECK(corpus == reloaded);
    }
    SUBCASE("binary") {
        const auto dir = temp_dir("roundtrip_bin");
        save_corpus_binary(corpus, dir / "corpus.bin");
        const Corpus reloaded = load_corpus_binary(dir / "corpus.bin");
        CHECK(corpus == reloaded);
    }
    SUBCASE("binary rejects garbage") {
        const auto dir = temp_dir("roundtrip_garbage");
        write_file(dir / "junk.bin", "not a corpus");
        CHECK_THROWS_AS(load_corpus_binary(dir / "junk.bin"), Error);
    }
}

TEST_CASE("min-papers-per-author filter cascades to a fixpoint") {
    // a3 has two papers but one is removed by min_refs; the other must follow
    Corpus::Builder b;
    b.add_paper("keep1", 2000, "F", 1);
    b.add_paper("keep2", 2000, "F", 1);
    b.add_paper("short", 2000, "F", 1);
    b.add_paper("other", 2000, "F", 1);
    b.add_paper("t1", 1999, "F", 1);
    b.add_paper("t2", 1999, "F", 1);
    b.add_citation("keep1", "t1");
    b.add_citation("keep1", "t2");
    b.add_citation("keep2", "t1");
    b.add_citation("keep2", "t2");
    b.add_citation("short", "t1");
    b.add_citation("other", "t1");
    b.add_citation("other", "t2");
    b.add_authorship("keep1", "a1");
    b.add_authorship("keep2", "a1");
    b.add_authorship("short", "a3");
    b.add_authorship("other", "a3");
    const Corpus corpus = b.build();

    FilterSpec spec;
    spec.min_refs = 2;
    spec.require_cited = false;
    spec.min_papers_per_author = 2;
    const auto view = apply_filters(corpus, spec);
    CHECK(view.provenance.min_refs == 3);  // "short" plus the two referees
    CHECK(view.provenance.min_papers_per_author == 1);  // "other" follows
    CHECK(view.papers.size() == 2);

    const auto panel = build_panel(view, corpus, 2);
    for (AuthorIndex a : panel.authors) {
        std::size_t rows = 0;
        for (const auto& row : panel.rows) {
            if (row.author == a) ++rows;
        }
        CHECK(rows >= 2);
    }
}

TEST_CASE("empty filter result is flagged, not an error") {
    Corpus::Builder b;
    b.add_paper("p1", 2000, "F", 1);
    const Corpus corpus = b.build();
    FilterSpec spec;  // min_refs 10 removes the only paper
    spec.min_papers_per_author = 0;
    const auto view = apply_filters(corpus, spec);
    CHECK(view.papers.empty());
    CHECK(view.provenance.empty_result);
}
