#include "specverse/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "specverse/csv.hpp"
#include "specverse/disruption.hpp"
#include "specverse/error.hpp"
#include "specverse/stats.hpp"

namespace specverse {

namespace {

template <typename Target>
void build_csr(std::size_t source_count, std::vector<std::pair<std::uint32_t, Target>>& edges,
               std::vector<std::uint64_t>& offsets, std::vector<Target>& targets) {
    std::sort(edges.begin(), edges.end());
    offsets.assign(source_count + 1, 0);
    for (const auto& [s, t] : edges) offsets[s + 1]++;
    for (std::size_t i = 1; i <= source_count; ++i) offsets[i] += offsets[i - 1];
    targets.resize(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) targets[i] = edges[i].second;
}

}  // namespace

std::optional<PaperIndex> Corpus::find_paper(std::string_view id) const {
    auto it = std::lower_bound(papers_.begin(), papers_.end(), id,
                               [](const Paper& p, std::string_view v) { return p.id < v; });
    if (it == papers_.end() || it->id != id) return std::nullopt;
    return static_cast<PaperIndex>(it - papers_.begin());
}

std::optional<AuthorIndex> Corpus::find_author(std::string_view id) const {
    auto it = std::lower_bound(author_ids_.begin(), author_ids_.end(), id);
    if (it == author_ids_.end() || *it != id) return std::nullopt;
    return static_cast<AuthorIndex>(it - author_ids_.begin());
}

std::span<const PaperIndex> Corpus::references(PaperIndex p) const {
    const auto i = static_cast<std::size_t>(p);
    return {forward_targets_.data() + forward_offsets_[i],
            forward_targets_.data() + forward_offsets_[i + 1]};
}

std::span<const PaperIndex> Corpus::citers(PaperIndex p) const {
    const auto i = static_cast<std::size_t>(p);
    return {reverse_targets_.data() + reverse_offsets_[i],
            reverse_targets_.data() + reverse_offsets_[i + 1]};
}

std::span<const PaperIndex> Corpus::papers_of_author(AuthorIndex a) const {
    const auto i = static_cast<std::size_t>(a);
    return {author_paper_targets_.data() + author_paper_offsets_[i],
            author_paper_targets_.data() + author_paper_offsets_[i + 1]};
}

std::span<const AuthorIndex> Corpus::authors_of_paper(PaperIndex p) const {
    const auto i = static_cast<std::size_t>(p);
    return {paper_author_targets_.data() + paper_author_offsets_[i],
            paper_author_targets_.data() + paper_author_offsets_[i + 1]};
}

bool Corpus::operator==(const Corpus& other) const {
    auto paper_eq = [](const Paper& a, const Paper& b) {
        return a.id == b.id && a.year == b.year && a.field == b.field &&
               a.team_size == b.team_size && a.n_refs_unlinked == b.n_refs_unlinked;
    };
    if (papers_.size() != other.papers_.size()) return false;
    for (std::size_t i = 0; i < papers_.size(); ++i) {
        if (!paper_eq(papers_[i], other.papers_[i])) return false;
    }
    return field_names_ == other.field_names_ && author_ids_ == other.author_ids_ &&
           forward_offsets_ == other.forward_offsets_ &&
           forward_targets_ == other.forward_targets_ &&
           author_paper_offsets_ == other.author_paper_offsets_ &&
           author_paper_targets_ == other.author_paper_targets_;
}

void Corpus::Builder::add_paper(std::string id, int year, std::string field, int team_size,
                                int n_refs_unlinked) {
    papers_.push_back({std::move(id), year, std::move(field), team_size, n_refs_unlinked});
}

void Corpus::Builder::add_paper_derived_team(std::string id, int year, std::string field,
                                             int n_refs_unlinked) {
    papers_.push_back({std::move(id), year, std::move(field), -1, n_refs_unlinked});
}

void Corpus::Builder::add_citation(std::string citing_id, std::string cited_id) {
    citations_.emplace_back(std::move(citing_id), std::move(cited_id));
}

void Corpus::Builder::add_authorship(std::string paper_id, std::string author_id) {
    authorships_.emplace_back(std::move(paper_id), std::move(author_id));
}

Corpus Corpus::Builder::build() {
    Corpus corpus;

    std::sort(papers_.begin(), papers_.end(),
              [](const RawPaper& a, const RawPaper& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < papers_.size(); ++i) {
        if (papers_[i].id == papers_[i - 1].id) {
            throw validation_error("duplicate paper id '" + papers_[i].id + "'");
        }
    }
    if (papers_.empty()) throw validation_error("corpus has no papers");

    std::map<std::string, std::int32_t> field_index;
    corpus.papers_.reserve(papers_.size());
    corpus.min_year_ = std::numeric_limits<int>::max();
    corpus.max_year_ = std::numeric_limits<int>::min();
    for (auto& raw : papers_) {
        if (required_years_ &&
            (raw.year < required_years_->first || raw.year > required_years_->second)) {
            throw validation_error("paper '" + raw.id + "': year " + std::to_string(raw.year) +
                                   " outside the declared corpus range [" +
                                   std::to_string(required_years_->first) + "," +
                                   std::to_string(required_years_->second) + "]");
        }
        if (raw.team_size != -1 && raw.team_size < 1) {
            throw validation_error("paper '" + raw.id + "': team_size must be >= 1, got " +
                                   std::to_string(raw.team_size));
        }
        if (raw.n_refs_unlinked < 0) {
            throw validation_error("paper '" + raw.id + "': n_refs_unlinked must be >= 0");
        }
        auto [it, inserted] = field_index.try_emplace(raw.field, 0);
        (void)inserted;
        Paper p;
        p.id = std::move(raw.id);
        p.year = raw.year;
        p.team_size = raw.team_size;
        p.n_refs_unlinked = raw.n_refs_unlinked;
        corpus.min_year_ = std::min(corpus.min_year_, p.year);
        corpus.max_year_ = std::max(corpus.max_year_, p.year);
        corpus.papers_.push_back(std::move(p));
        // field resolved below once the name table is frozen
    }
    corpus.field_names_.reserve(field_index.size());
    for (auto& [name, idx] : field_index) {
        idx = static_cast<std::int32_t>(corpus.field_names_.size());
        corpus.field_names_.push_back(name);
    }
    for (std::size_t i = 0; i < papers_.size(); ++i) {
        corpus.papers_[i].field = field_index.at(papers_[i].field);
    }

    // Citations: citing side must resolve; unresolved cited ids drop the edge
    // and, unless counts came from the input file, bump n_refs_unlinked.
    std::vector<std::pair<std::uint32_t, PaperIndex>> fwd;
    fwd.reserve(citations_.size());
    for (const auto& [citing, cited] : citations_) {
        auto c = corpus.find_paper(citing);
        if (!c) {
            throw validation_error("citation references unknown citing paper '" + citing + "'");
        }
        auto t = corpus.find_paper(cited);
        if (!t) {
            ++dropped_unlinked_;
            if (!unlinked_from_input_) {
                corpus.papers_[static_cast<std::size_t>(*c)].n_refs_unlinked++;
            }
            continue;
        }
        if (*c == *t) {
            throw validation_error("self-citation on paper '" + citing + "'");
        }
        fwd.emplace_back(static_cast<std::uint32_t>(*c), *t);
    }
    std::sort(fwd.begin(), fwd.end());
    const auto before = fwd.size();
    fwd.erase(std::unique(fwd.begin(), fwd.end()), fwd.end());
    dup_edges_ = before - fwd.size();

    std::vector<std::pair<std::uint32_t, PaperIndex>> rev;
    rev.reserve(fwd.size());
    for (const auto& [s, t] : fwd) rev.emplace_back(static_cast<std::uint32_t>(t), static_cast<PaperIndex>(s));
    build_csr(corpus.papers_.size(), fwd, corpus.forward_offsets_, corpus.forward_targets_);
    build_csr(corpus.papers_.size(), rev, corpus.reverse_offsets_, corpus.reverse_targets_);

    // Authorships.
    std::vector<std::string> author_names;
    author_names.reserve(authorships_.size());
    for (const auto& [paper, author] : authorships_) {
        (void)paper;
        author_names.push_back(author);
    }
    std::sort(author_names.begin(), author_names.end());
    author_names.erase(std::unique(author_names.begin(), author_names.end()), author_names.end());
    corpus.author_ids_ = std::move(author_names);

    std::vector<std::pair<std::uint32_t, PaperIndex>> ap;  // author -> paper
    ap.reserve(authorships_.size());
    for (const auto& [paper, author] : authorships_) {
        auto p = corpus.find_paper(paper);
        if (!p) {
            throw validation_error("authorship references unknown paper '" + paper + "'");
        }
        auto a = corpus.find_author(author);
        ap.emplace_back(static_cast<std::uint32_t>(*a), *p);
    }
    std::sort(ap.begin(), ap.end());
    const auto ap_before = ap.size();
    ap.erase(std::unique(ap.begin(), ap.end()), ap.end());
    dup_authorships_ = ap_before - ap.size();

    std::vector<std::pair<std::uint32_t, AuthorIndex>> pa;
    pa.reserve(ap.size());
    for (const auto& [a, p] : ap) pa.emplace_back(static_cast<std::uint32_t>(p), static_cast<AuthorIndex>(a));
    build_csr(corpus.author_ids_.size(), ap, corpus.author_paper_offsets_, corpus.author_paper_targets_);
    build_csr(corpus.papers_.size(), pa, corpus.paper_author_offsets_, corpus.paper_author_targets_);

    // Team sizes derived from authorships where the input had none.
    for (std::size_t i = 0; i < corpus.papers_.size(); ++i) {
        auto& paper = corpus.papers_[i];
        if (paper.team_size == -1) {
            const auto n = corpus.authors_of_paper(static_cast<PaperIndex>(i)).size();
            if (n == 0) {
                throw validation_error("paper '" + paper.id +
                                       "': no team_size column and no authorship rows to derive it");
            }
            paper.team_size = static_cast<int>(n);
        }
    }

    return corpus;
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

namespace {

std::ifstream open_or_throw(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw io_error("cannot open '" + file.string() + "'");
    return in;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& papers_file,
                   const std::filesystem::path& citations_file,
                   const std::filesystem::path& authorships_file,
                   const std::optional<std::filesystem::path>& field_map_file,
                   const LoadOptions& options, LoadReport* report) {
    Corpus::Builder builder;
    LoadReport local;

    std::unordered_map<std::string, std::string> field_map;
    if (field_map_file) {
        auto in = open_or_throw(*field_map_file);
        DelimitedReader reader(in, field_map_file->string());
        const auto cat = reader.require_column("category");
        const auto maj = reader.require_column("major_field");
        std::vector<std::string> row;
        while (reader.next_row(row)) field_map[row[cat]] = row[maj];
        local.field_map_applied = true;
    }

    {
        auto in = open_or_throw(papers_file);
        DelimitedReader reader(in, papers_file.string());
        const auto id_col = reader.require_column("id");
        const auto year_col = reader.require_column("year");
        auto field_col = reader.find_column("field");
        if (!field_col) field_col = reader.find_column("category");
        if (!field_col) {
            throw schema_error(papers_file.string() + ": missing column 'field' (or 'category')");
        }
        const auto team_col = reader.find_column("team_size");
        const auto unlinked_col = reader.find_column("n_refs_unlinked");
        builder.set_unlinked_counts_from_input(unlinked_col.has_value());
        if (options.year_range) {
            builder.set_required_year_range(options.year_range->first, options.year_range->second);
        }
        local.team_size_derived = !team_col.has_value();

        std::vector<std::string> row;
        while (reader.next_row(row)) {
            const auto year = static_cast<int>(reader.parse_int(row[year_col], "year"));
            std::string field = row[*field_col];
            if (auto it = field_map.find(field); it != field_map.end()) field = it->second;
            const int unlinked =
                unlinked_col ? static_cast<int>(reader.parse_int(row[*unlinked_col], "n_refs_unlinked")) : 0;
            if (team_col) {
                const auto team = static_cast<int>(reader.parse_int(row[*team_col], "team_size"));
                if (team < 1) {
                    throw validation_error(papers_file.string() + ":" +
                                           std::to_string(reader.line_number()) +
                                           ": team_size must be >= 1, got " + std::to_string(team) +
                                           " (paper '" + row[id_col] + "')");
                }
                builder.add_paper(row[id_col], year, std::move(field), team, unlinked);
            } else {
                builder.add_paper_derived_team(row[id_col], year, std::move(field), unlinked);
            }
            ++local.papers;
        }
    }

    {
        auto in = open_or_throw(citations_file);
        DelimitedReader reader(in, citations_file.string());
        const auto citing = reader.require_column("citing_id");
        const auto cited = reader.require_column("cited_id");
        std::vector<std::string> row;
        while (reader.next_row(row)) builder.add_citation(row[citing], row[cited]);
    }

    if (!authorships_file.empty()) {
        auto in = open_or_throw(authorships_file);
        DelimitedReader reader(in, authorships_file.string());
        const auto paper = reader.require_column("paper_id");
        const auto author = reader.require_column("author_id");
        std::vector<std::string> row;
        while (reader.next_row(row)) {
            builder.add_authorship(row[paper], row[author]);
            ++local.authorship_rows;
        }
    } else if (local.team_size_derived) {
        throw schema_error(papers_file.string() +
                           ": no team_size column and no authorships file to derive it from");
    }

    Corpus corpus = builder.build();
    local.citation_edges = corpus.citation_edge_count();
    local.unlinked_refs_dropped = builder.dropped_unlinked_edges();
    local.duplicate_edges = builder.deduplicated_edges();
    local.duplicate_authorships = builder.deduplicated_authorships();
    if (report) *report = local;
    return corpus;
}

Corpus load_corpus_dir(const std::filesystem::path& dir, LoadReport* report) {
    return load_corpus(dir / "papers.csv", dir / "citations.csv", dir / "authorships.csv",
                       std::nullopt, {}, report);
}

Corpus load_corpus_any(const std::filesystem::path& path, LoadReport* report) {
    if (std::filesystem::is_directory(path)) return load_corpus_dir(path, report);
    Corpus corpus = load_corpus_binary(path);
    if (report) {
        *report = {};
        report->papers = corpus.paper_count();
        report->citation_edges = corpus.citation_edge_count();
        report->authorship_rows = corpus.authorship_count();
    }
    return corpus;
}

std::string LoadReport::to_string() const {
    std::ostringstream os;
    os << "papers=" << papers << " citations=" << citation_edges
       << " authorships=" << authorship_rows << " unlinked_refs_dropped=" << unlinked_refs_dropped
       << " duplicate_edges=" << duplicate_edges
       << " duplicate_authorships=" << duplicate_authorships;
    if (team_size_derived) os << " team_size=derived";
    if (field_map_applied) os << " field_map=applied";
    return os.str();
}

void export_corpus_csv(const Corpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    {
        std::ofstream out(dir / "papers.csv");
        if (!out) throw io_error("cannot write '" + (dir / "papers.csv").string() + "'");
        out << "id,year,field,team_size,n_refs_unlinked\n";
        for (std::size_t i = 0; i < corpus.paper_count(); ++i) {
            const auto& p = corpus.paper(static_cast<PaperIndex>(i));
            out << p.id << ',' << p.year << ',' << corpus.field_names()[static_cast<std::size_t>(p.field)]
                << ',' << p.team_size << ',' << p.n_refs_unlinked << '\n';
        }
    }
    {
        std::ofstream out(dir / "citations.csv");
        if (!out) throw io_error("cannot write '" + (dir / "citations.csv").string() + "'");
        out << "citing_id,cited_id\n";
        for (std::size_t i = 0; i < corpus.paper_count(); ++i) {
            const auto p = static_cast<PaperIndex>(i);
            for (PaperIndex t : corpus.references(p)) {
                out << corpus.paper(p).id << ',' << corpus.paper(t).id << '\n';
            }
        }
    }
    {
        std::ofstream out(dir / "authorships.csv");
        if (!out) throw io_error("cannot write '" + (dir / "authorships.csv").string() + "'");
        out << "paper_id,author_id\n";
        for (std::size_t i = 0; i < corpus.paper_count(); ++i) {
            const auto p = static_cast<PaperIndex>(i);
            for (AuthorIndex a : corpus.authors_of_paper(p)) {
                out << corpus.paper(p).id << ',' << corpus.author_id(a) << '\n';
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Binary format
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'P', 'V', 'C', 'O', 'R', 'P', '\0'};

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void write_i32(std::ostream& out, std::int32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
std::int32_t read_i32(std::istream& in) {
    std::int32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::string read_string(std::istream& in) {
    const auto n = read_u32(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    return s;
}

}  // namespace

void save_corpus_binary(const Corpus& corpus, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw io_error("cannot write '" + file.string() + "'");
    out.write(kMagic, 8);
    write_u32(out, 1);  // corpus format version

    write_u32(out, static_cast<std::uint32_t>(corpus.field_names().size()));
    for (const auto& f : corpus.field_names()) write_string(out, f);

    write_u64(out, corpus.paper_count());
    for (std::size_t i = 0; i < corpus.paper_count(); ++i) {
        const auto& p = corpus.paper(static_cast<PaperIndex>(i));
        write_string(out, p.id);
        write_i32(out, p.year);
        write_i32(out, p.field);
        write_i32(out, p.team_size);
        write_i32(out, p.n_refs_unlinked);
    }

    std::uint64_t edges = corpus.citation_edge_count();
    write_u64(out, edges);
    for (std::size_t i = 0; i < corpus.paper_count(); ++i) {
        const auto p = static_cast<PaperIndex>(i);
        for (PaperIndex t : corpus.references(p)) {
            write_u32(out, static_cast<std::uint32_t>(p));
            write_u32(out, static_cast<std::uint32_t>(t));
        }
    }

    write_u64(out, corpus.author_count());
    for (std::size_t i = 0; i < corpus.author_count(); ++i) {
        write_string(out, corpus.author_id(static_cast<AuthorIndex>(i)));
    }
    write_u64(out, corpus.authorship_count());
    for (std::size_t i = 0; i < corpus.author_count(); ++i) {
        const auto a = static_cast<AuthorIndex>(i);
        for (PaperIndex p : corpus.papers_of_author(a)) {
            write_u32(out, static_cast<std::uint32_t>(a));
            write_u32(out, static_cast<std::uint32_t>(p));
        }
    }
    if (!out) throw io_error("write failed on '" + file.string() + "'");
}

Corpus load_corpus_binary(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw io_error("cannot open '" + file.string() + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || !std::equal(magic, magic + 8, kMagic)) {
        throw schema_error("'" + file.string() + "' is not a corpus file");
    }
    const auto version = read_u32(in);
    if (version != 1) {
        throw schema_error("'" + file.string() + "': unsupported corpus format version " +
                           std::to_string(version));
    }

    std::vector<std::string> fields(read_u32(in));
    for (auto& f : fields) f = read_string(in);

    Corpus::Builder builder;
    builder.set_unlinked_counts_from_input(true);
    const auto n_papers = read_u64(in);
    std::vector<std::string> paper_ids(n_papers);
    for (std::uint64_t i = 0; i < n_papers; ++i) {
        std::string id = read_string(in);
        const auto year = read_i32(in);
        const auto field = read_i32(in);
        const auto team = read_i32(in);
        const auto unlinked = read_i32(in);
        if (field < 0 || static_cast<std::size_t>(field) >= fields.size()) {
            throw schema_error("'" + file.string() + "': field index out of range");
        }
        paper_ids[i] = id;
        builder.add_paper(std::move(id), year, fields[static_cast<std::size_t>(field)], team,
                          unlinked);
    }

    const auto n_edges = read_u64(in);
    for (std::uint64_t i = 0; i < n_edges; ++i) {
        const auto s = read_u32(in);
        const auto t = read_u32(in);
        if (s >= n_papers || t >= n_papers) {
            throw schema_error("'" + file.string() + "': edge index out of range");
        }
        builder.add_citation(paper_ids[s], paper_ids[t]);
    }

    const auto n_authors = read_u64(in);
    std::vector<std::string> author_ids(n_authors);
    for (auto& a : author_ids) a = read_string(in);
    const auto n_auth_rows = read_u64(in);
    for (std::uint64_t i = 0; i < n_auth_rows; ++i) {
        const auto a = read_u32(in);
        const auto p = read_u32(in);
        if (a >= n_authors || p >= n_papers) {
            throw schema_error("'" + file.string() + "': authorship index out of range");
        }
        builder.add_authorship(paper_ids[p], author_ids[a]);
    }
    if (!in) throw schema_error("'" + file.string() + "': truncated corpus file");
    return builder.build();
}

// ---------------------------------------------------------------------------
// Filters, panel, descriptives
// ---------------------------------------------------------------------------

SampleView SampleView::all_of(const Corpus& corpus) {
    SampleView view;
    view.papers.resize(corpus.paper_count());
    for (std::size_t i = 0; i < view.papers.size(); ++i) view.papers[i] = static_cast<PaperIndex>(i);
    return view;
}

bool SampleView::contains(PaperIndex p) const {
    return std::binary_search(papers.begin(), papers.end(), p);
}

SampleView apply_filters(const Corpus& corpus, const FilterSpec& spec,
                         const WindowSpec& window_for_cites) {
    if (spec.min_refs < 0) throw validation_error("min_refs must be >= 0");
    if (spec.year_range && spec.year_range->first > spec.year_range->second) {
        throw validation_error("year_range is empty");
    }

    SampleView view = SampleView::all_of(corpus);
    auto& prov = view.provenance;

    auto remove_if = [&](auto pred, std::size_t& counter) {
        auto it = std::remove_if(view.papers.begin(), view.papers.end(), pred);
        counter += static_cast<std::size_t>(view.papers.end() - it);
        view.papers.erase(it, view.papers.end());
    };

    if (spec.year_range) {
        remove_if(
            [&](PaperIndex p) {
                const int y = corpus.paper(p).year;
                return y < spec.year_range->first || y > spec.year_range->second;
            },
            prov.year_range);
    }
    if (spec.require_fully_linked) {
        remove_if([&](PaperIndex p) { return corpus.paper(p).n_refs_unlinked != 0; },
                  prov.unlinked_refs);
    }
    if (spec.min_refs > 0) {
        remove_if(
            [&](PaperIndex p) {
                std::int64_t refs = static_cast<std::int64_t>(corpus.references(p).size());
                if (spec.count_unlinked_refs) refs += corpus.paper(p).n_refs_unlinked;
                return refs < spec.min_refs;
            },
            prov.min_refs);
    }
    if (spec.require_cited) {
        remove_if([&](PaperIndex p) { return corpus.citers(p).empty(); }, prov.uncited);
    }
    if (spec.outlier_max_refs || spec.outlier_max_cites) {
        remove_if(
            [&](PaperIndex p) {
                if (spec.outlier_max_refs &&
                    static_cast<std::int64_t>(corpus.references(p).size()) > *spec.outlier_max_refs) {
                    return true;
                }
                if (spec.outlier_max_cites &&
                    citation_count(corpus, p, window_for_cites) > *spec.outlier_max_cites) {
                    return true;
                }
                return false;
            },
            prov.outliers);
    }
    if (spec.min_papers_per_author > 0 && corpus.has_authorships()) {
        // Iterate to a fixpoint so reapplying the filter is a no-op.
        std::vector<std::int64_t> author_counts(corpus.author_count(), 0);
        for (;;) {
            std::fill(author_counts.begin(), author_counts.end(), 0);
            for (PaperIndex p : view.papers) {
                for (AuthorIndex a : corpus.authors_of_paper(p)) {
                    author_counts[static_cast<std::size_t>(a)]++;
                }
            }
            std::size_t removed_now = 0;
            remove_if(
                [&](PaperIndex p) {
                    for (AuthorIndex a : corpus.authors_of_paper(p)) {
                        if (author_counts[static_cast<std::size_t>(a)] >= spec.min_papers_per_author) {
                            return false;
                        }
                    }
                    removed_now++;
                    return true;
                },
                prov.min_papers_per_author);
            if (removed_now == 0) break;
        }
    }

    prov.empty_result = view.papers.empty();
    return view;
}

AuthorPaperPanel build_panel(const SampleView& sample, const Corpus& corpus,
                             int min_papers_per_author) {
    if (!corpus.has_authorships()) {
        throw validation_error("cannot build an author-paper panel: corpus has no authorships");
    }
    AuthorPaperPanel panel;
    std::vector<char> in_sample(corpus.paper_count(), 0);
    for (PaperIndex p : sample.papers) in_sample[static_cast<std::size_t>(p)] = 1;

    for (std::size_t ai = 0; ai < corpus.author_count(); ++ai) {
        const auto a = static_cast<AuthorIndex>(ai);
        std::size_t kept = 0;
        for (PaperIndex p : corpus.papers_of_author(a)) {
            if (in_sample[static_cast<std::size_t>(p)]) ++kept;
        }
        if (kept < static_cast<std::size_t>(min_papers_per_author)) continue;
        panel.authors.push_back(a);
        for (PaperIndex p : corpus.papers_of_author(a)) {
            if (in_sample[static_cast<std::size_t>(p)]) panel.rows.push_back({a, p});
        }
    }
    // papers_of_author spans are sorted, authors iterated in order, so rows
    // are already (author, paper) sorted.
    return panel;
}

StatsTable descriptive_stats(const Corpus& corpus, const SampleView& sample,
                             const std::vector<std::string>& variables, bool scale_di_by_100,
                             const ScoreMatrix* scores) {
    StatsTable table;
    for (const auto& name : variables) {
        std::vector<double> values;
        values.reserve(sample.papers.size());
        if (name == "team_size") {
            for (PaperIndex p : sample.papers) values.push_back(corpus.paper(p).team_size);
        } else if (name == "year") {
            for (PaperIndex p : sample.papers) values.push_back(corpus.paper(p).year);
        } else if (name == "refs") {
            for (PaperIndex p : sample.papers)
                values.push_back(static_cast<double>(corpus.references(p).size()));
        } else if (name == "refs_total") {
            for (PaperIndex p : sample.papers)
                values.push_back(static_cast<double>(corpus.references(p).size()) +
                                 corpus.paper(p).n_refs_unlinked);
        } else if (name.rfind("cites:", 0) == 0) {
            const auto window = WindowSpec::parse(name.substr(6));
            for (PaperIndex p : sample.papers)
                values.push_back(static_cast<double>(citation_count(corpus, p, window)));
        } else if (name.rfind("di:", 0) == 0) {
            if (!scores) throw usage_error("variable '" + name + "' requires a score matrix");
            // di:<b>:<window>:<mode>
            const auto rest = name.substr(3);
            const auto c1 = rest.find(':');
            const auto c2 = rest.rfind(':');
            if (c1 == std::string::npos || c2 == c1) {
                throw usage_error("bad disruption variable '" + name + "'");
            }
            ScoreVariant v;
            v.b = static_cast<int>(std::stol(std::string(rest.substr(0, c1))));
            v.window = WindowSpec::parse(rest.substr(c1 + 1, c2 - c1 - 1));
            v.nr_mode = parse_nr_mode(rest.substr(c2 + 1));
            const auto vi = scores->find_variant(v);
            if (!vi) throw usage_error("variant not present in score matrix: " + v.to_string());
            for (PaperIndex p : sample.papers) {
                const auto row = scores->row_of(p);
                if (!row) continue;
                const auto& cell = scores->cell(*row, *vi);
                if (cell.status != ScoreStatus::ok) continue;
                values.push_back(scale_di_by_100 ? cell.value * 100.0 : cell.value);
            }
        } else {
            throw usage_error("unknown variable '" + name + "'");
        }

        VariableStats vs;
        vs.name = name;
        vs.n = values.size();
        if (!values.empty()) {
            vs.min = *std::min_element(values.begin(), values.end());
            vs.max = *std::max_element(values.begin(), values.end());
            vs.mean = mean(values);
            vs.sd = sample_sd(values);
        }
        table.variables.push_back(std::move(vs));
    }

    std::map<std::string, std::size_t> field_counts;
    for (PaperIndex p : sample.papers) {
        field_counts[corpus.field_names()[static_cast<std::size_t>(corpus.paper(p).field)]]++;
    }
    for (const auto& [field, count] : field_counts) {
        FieldShare share;
        share.field = field;
        share.count = count;
        share.percent =
            sample.papers.empty() ? 0.0 : 100.0 * static_cast<double>(count) / sample.papers.size();
        table.field_distribution.push_back(std::move(share));
    }
    return table;
}

}  // namespace specverse
