#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "specverse/window.hpp"

namespace specverse {

class ScoreMatrix;  // disruption.hpp

using PaperIndex = std::int32_t;
using AuthorIndex = std::int32_t;

struct Paper {
    std::string id;
    int year = 0;
    std::int32_t field = 0;  // index into Corpus::field_names()
    int team_size = 1;
    int n_refs_unlinked = 0;
};

/// Immutable citation network: papers, citation edges, authorships, and both
/// adjacency directions. Indices are dense and sorted by paper id, so every
/// traversal order is canonical. Safe to share across threads after build.
class Corpus {
public:
    std::size_t paper_count() const { return papers_.size(); }
    const Paper& paper(PaperIndex i) const { return papers_[static_cast<std::size_t>(i)]; }
    std::optional<PaperIndex> find_paper(std::string_view id) const;

    // Outgoing citations (the paper's linked reference list).
    std::span<const PaperIndex> references(PaperIndex p) const;
    // Incoming citations.
    std::span<const PaperIndex> citers(PaperIndex p) const;

    std::size_t author_count() const { return author_ids_.size(); }
    const std::string& author_id(AuthorIndex a) const { return author_ids_[static_cast<std::size_t>(a)]; }
    std::optional<AuthorIndex> find_author(std::string_view id) const;
    std::span<const PaperIndex> papers_of_author(AuthorIndex a) const;
    std::span<const AuthorIndex> authors_of_paper(PaperIndex p) const;
    bool has_authorships() const { return !author_ids_.empty(); }

    const std::vector<std::string>& field_names() const { return field_names_; }
    std::size_t citation_edge_count() const { return forward_targets_.size(); }
    std::size_t authorship_count() const { return paper_author_targets_.size(); }

    int min_year() const { return min_year_; }
    int max_year() const { return max_year_; }

    bool operator==(const Corpus& other) const;

    /// Accumulates rows and produces a validated Corpus. Unresolved cited ids
    /// are dropped and, unless told that unlinked-reference counts came from
    /// the input file, added to the citing paper's n_refs_unlinked.
    class Builder {
    public:
        void add_paper(std::string id, int year, std::string field, int team_size,
                       int n_refs_unlinked = 0);
        // team_size filled from authorships at build time.
        void add_paper_derived_team(std::string id, int year, std::string field,
                                    int n_refs_unlinked = 0);
        void add_citation(std::string citing_id, std::string cited_id);
        void add_authorship(std::string paper_id, std::string author_id);

        // The papers input carried its own n_refs_unlinked column, so dropped
        // edges must not increment it.
        void set_unlinked_counts_from_input(bool v) { unlinked_from_input_ = v; }
        // Papers outside this inclusive range are a hard error.
        void set_required_year_range(int lo, int hi) { required_years_ = {lo, hi}; }

        std::size_t dropped_unlinked_edges() const { return dropped_unlinked_; }
        std::size_t deduplicated_edges() const { return dup_edges_; }
        std::size_t deduplicated_authorships() const { return dup_authorships_; }

        Corpus build();

    private:
        struct RawPaper {
            std::string id;
            int year;
            std::string field;
            int team_size;  // -1 => derive from authorships
            int n_refs_unlinked;
        };
        std::vector<RawPaper> papers_;
        std::vector<std::pair<std::string, std::string>> citations_;
        std::vector<std::pair<std::string, std::string>> authorships_;
        bool unlinked_from_input_ = false;
        std::optional<std::pair<int, int>> required_years_;
        std::size_t dropped_unlinked_ = 0;
        std::size_t dup_edges_ = 0;
        std::size_t dup_authorships_ = 0;
    };

private:
    friend class Builder;

    std::vector<Paper> papers_;
    std::vector<std::string> field_names_;
    std::vector<std::string> author_ids_;

    // CSR adjacency, targets sorted within each row.
    std::vector<std::uint64_t> forward_offsets_;
    std::vector<PaperIndex> forward_targets_;
    std::vector<std::uint64_t> reverse_offsets_;
    std::vector<PaperIndex> reverse_targets_;
    std::vector<std::uint64_t> author_paper_offsets_;
    std::vector<PaperIndex> author_paper_targets_;
    std::vector<std::uint64_t> paper_author_offsets_;
    std::vector<AuthorIndex> paper_author_targets_;

    int min_year_ = 0;
    int max_year_ = 0;
};

struct LoadOptions {
    // When set, a paper whose year falls outside is rejected with an explicit
    // error instead of silently truncating windows later.
    std::optional<std::pair<int, int>> year_range;
};

struct LoadReport {
    std::size_t papers = 0;
    std::size_t citation_edges = 0;
    std::size_t authorship_rows = 0;
    std::size_t unlinked_refs_dropped = 0;
    std::size_t duplicate_edges = 0;
    std::size_t duplicate_authorships = 0;
    bool team_size_derived = false;
    bool field_map_applied = false;

    std::string to_string() const;
};

Corpus load_corpus(const std::filesystem::path& papers_file,
                   const std::filesystem::path& citations_file,
                   const std::filesystem::path& authorships_file,
                   const std::optional<std::filesystem::path>& field_map_file = std::nullopt,
                   const LoadOptions& options = {},
                   LoadReport* report = nullptr);

// Directory containing papers.csv, citations.csv, authorships.csv.
Corpus load_corpus_dir(const std::filesystem::path& dir, LoadReport* report = nullptr);
// Dispatch: directory of CSVs, or a binary corpus file.
Corpus load_corpus_any(const std::filesystem::path& path, LoadReport* report = nullptr);

// Canonical CSV export; loading the result reproduces the corpus exactly.
void export_corpus_csv(const Corpus& corpus, const std::filesystem::path& dir);

void save_corpus_binary(const Corpus& corpus, const std::filesystem::path& file);
Corpus load_corpus_binary(const std::filesystem::path& file);

struct FilterSpec {
    int min_refs = 10;
    // Count unlinked references toward min_refs as well; default counts
    // linked ones only.
    bool count_unlinked_refs = false;
    bool require_cited = true;
    bool require_fully_linked = true;
    int min_papers_per_author = 2;
    std::optional<std::pair<int, int>> year_range;
    std::optional<int> outlier_max_refs;
    std::optional<int> outlier_max_cites;
};

// Removal counts in the fixed application order.
struct FilterProvenance {
    std::size_t year_range = 0;
    std::size_t unlinked_refs = 0;
    std::size_t min_refs = 0;
    std::size_t uncited = 0;
    std::size_t outliers = 0;
    std::size_t min_papers_per_author = 0;
    bool empty_result = false;

    std::size_t total_removed() const {
        return year_range + unlinked_refs + min_refs + uncited + outliers + min_papers_per_author;
    }
};

struct SampleView {
    std::vector<PaperIndex> papers;  // ascending
    FilterProvenance provenance;

    static SampleView all_of(const Corpus& corpus);
    bool contains(PaperIndex p) const;
    std::size_t size() const { return papers.size(); }
};

/// Applies every enabled filter in the fixed order year range -> fully
/// linked -> min refs -> cited -> outliers -> min papers per author.
/// `window_for_cites` is the window at which outlier citation counts are
/// taken (required when outlier_max_cites is set).
SampleView apply_filters(const Corpus& corpus, const FilterSpec& spec,
                         const WindowSpec& window_for_cites = WindowSpec::years(5));

struct PanelRow {
    AuthorIndex author;
    PaperIndex paper;
};

struct AuthorPaperPanel {
    std::vector<PanelRow> rows;         // sorted by (author, paper)
    std::vector<AuthorIndex> authors;   // distinct authors present, ascending

    std::size_t size() const { return rows.size(); }
};

// One row per (author, retained paper); authors with fewer than
// min_papers_per_author retained papers are dropped with all their rows.
AuthorPaperPanel build_panel(const SampleView& sample, const Corpus& corpus,
                             int min_papers_per_author);

struct VariableStats {
    std::string name;
    double min = 0, max = 0, mean = 0, sd = 0;
    std::size_t n = 0;
};

struct FieldShare {
    std::string field;
    std::size_t count = 0;
    double percent = 0;
};

struct StatsTable {
    std::vector<VariableStats> variables;
    std::vector<FieldShare> field_distribution;
};

// Variables: team_size, year, refs, refs_total, cites:<window>,
// di:<b>:<window>:<consistent|legacy> (di:* requires `scores`).
StatsTable descriptive_stats(const Corpus& corpus, const SampleView& sample,
                             const std::vector<std::string>& variables,
                             bool scale_di_by_100, const ScoreMatrix* scores = nullptr);

}  // namespace specverse
