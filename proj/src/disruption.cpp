#include "specverse/disruption.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>
#include <unordered_set>

#include "specverse/csv.hpp"
#include "specverse/error.hpp"

namespace specverse {

const char* to_string(NrMode mode) {
    return mode == NrMode::consistent ? "consistent" : "legacy";
}

NrMode parse_nr_mode(std::string_view text) {
    if (text == "consistent") return NrMode::consistent;
    if (text == "legacy") return NrMode::legacy;
    throw schema_error("bad nr_mode '" + std::string(text) + "' (consistent|legacy)");
}

std::string ScoreVariant::to_string() const {
    return "DI" + std::to_string(b) + "@" + window.to_string() + "/" +
           specverse::to_string(nr_mode);
}

namespace {

// Reusable per-thread workspace for the coupling sweep: strength counts are
// epoch-stamped so resets cost O(touched), not O(papers).
struct CouplingScratch {
    std::vector<int> strength;
    std::vector<char> cites_focal;
    std::vector<std::uint32_t> stamp;
    std::uint32_t epoch = 0;
    std::vector<PaperIndex> touched;

    void resize(std::size_t n) {
        strength.assign(n, 0);
        cites_focal.assign(n, 0);
        stamp.assign(n, 0);
        epoch = 0;
        touched.clear();
    }

    void begin() {
        ++epoch;
        touched.clear();
    }

    void touch(PaperIndex p) {
        const auto i = static_cast<std::size_t>(p);
        if (stamp[i] != epoch) {
            stamp[i] = epoch;
            strength[i] = 0;
            cites_focal[i] = 0;
            touched.push_back(p);
        }
    }
};

// Candidates and strengths for ALL years; the citation window only filters
// membership (a citer's reference list is never time-filtered), so one pass
// serves every window.
void sweep_candidates(const Corpus& corpus, PaperIndex focal, CouplingScratch& scratch) {
    scratch.begin();
    for (PaperIndex q : corpus.citers(focal)) {
        scratch.touch(q);
        scratch.cites_focal[static_cast<std::size_t>(q)] = 1;
    }
    for (PaperIndex r : corpus.references(focal)) {
        for (PaperIndex q : corpus.citers(r)) {
            if (q == focal) continue;
            scratch.touch(q);
            scratch.strength[static_cast<std::size_t>(q)]++;
        }
    }
    std::sort(scratch.touched.begin(), scratch.touched.end());
}

DisruptionScore score_from_scratch(const Corpus& corpus, PaperIndex focal,
                                   const CouplingScratch& scratch, int b, const WindowSpec& window,
                                   NrMode nr_mode) {
    DisruptionScore score;
    score.focal = focal;
    score.threshold_b = b;
    score.window = window;
    score.nr_mode = nr_mode;

    const int focal_year = corpus.paper(focal).year;
    const int r_min = nr_mode == NrMode::consistent ? b : 1;
    for (PaperIndex q : scratch.touched) {
        if (!window.admits(focal_year, corpus.paper(q).year)) continue;
        const auto i = static_cast<std::size_t>(q);
        if (scratch.cites_focal[i]) {
            if (scratch.strength[i] >= b) {
                score.n_b++;
            } else {
                score.n_f++;
            }
        } else if (scratch.strength[i] >= r_min) {
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

}  // namespace

CouplingProfile coupling_profile(const Corpus& corpus, PaperIndex focal,
                                 const WindowSpec& window) {
    if (focal < 0 || static_cast<std::size_t>(focal) >= corpus.paper_count()) {
        throw validation_error("coupling_profile: focal paper index out of range");
    }
    if (corpus.references(focal).empty()) {
        throw validation_error("ZeroReferenceFocal: paper '" + corpus.paper(focal).id +
                               "' has no linked references");
    }
    CouplingScratch scratch;
    scratch.resize(corpus.paper_count());
    sweep_candidates(corpus, focal, scratch);

    CouplingProfile profile;
    profile.focal = focal;
    profile.window = window;
    const int focal_year = corpus.paper(focal).year;
    for (PaperIndex q : scratch.touched) {
        const int year = corpus.paper(q).year;
        if (!window.admits(focal_year, year)) continue;
        const auto i = static_cast<std::size_t>(q);
        profile.entries.push_back({q, year, scratch.cites_focal[i] != 0, scratch.strength[i]});
    }
    return profile;
}

DisruptionScore disruption_score(const CouplingProfile& profile, int b, NrMode nr_mode) {
    if (b < 1) throw validation_error("disruption threshold b must be >= 1");
    DisruptionScore score;
    score.focal = profile.focal;
    score.threshold_b = b;
    score.window = profile.window;
    score.nr_mode = nr_mode;
    const int r_min = nr_mode == NrMode::consistent ? b : 1;
    for (const auto& entry : profile.entries) {
        if (entry.cites_focal) {
            if (entry.strength >= b) {
                score.n_b++;
            } else {
                score.n_f++;
            }
        } else if (entry.strength >= r_min) {
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

std::int64_t citation_count(const Corpus& corpus, PaperIndex focal, const WindowSpec& window) {
    const int focal_year = corpus.paper(focal).year;
    std::int64_t count = 0;
    for (PaperIndex q : corpus.citers(focal)) {
        if (window.admits(focal_year, corpus.paper(q).year)) ++count;
    }
    return count;
}

ScoreMatrix::ScoreMatrix(std::vector<PaperIndex> papers, std::vector<ScoreVariant> variants)
    : papers_(std::move(papers)), variants_(std::move(variants)) {
    cells_.resize(papers_.size() * variants_.size());
}

std::optional<std::size_t> ScoreMatrix::find_variant(const ScoreVariant& v) const {
    for (std::size_t i = 0; i < variants_.size(); ++i) {
        if (variants_[i] == v) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> ScoreMatrix::row_of(PaperIndex paper) const {
    auto it = std::lower_bound(papers_.begin(), papers_.end(), paper);
    if (it == papers_.end() || *it != paper) return std::nullopt;
    return static_cast<std::size_t>(it - papers_.begin());
}

ScoreMatrix batch_scores(const Corpus& corpus, const SampleView& sample,
                         const std::vector<ScoreVariant>& variants, const BatchOptions& options) {
    for (const auto& v : variants) {
        if (v.b < 1) throw validation_error("disruption threshold b must be >= 1");
    }
    ScoreMatrix matrix(sample.papers, variants);

    const int workers = std::max(1, options.workers);
    auto worker_fn = [&](std::size_t begin, std::size_t end) {
        CouplingScratch scratch;
        scratch.resize(corpus.paper_count());
        for (std::size_t row = begin; row < end; ++row) {
            const PaperIndex focal = sample.papers[row];
            if (corpus.references(focal).empty()) {
                for (std::size_t vi = 0; vi < variants.size(); ++vi) {
                    auto& cell = matrix.cell(row, vi);
                    cell.status = ScoreStatus::zero_refs;
                }
                continue;
            }
            sweep_candidates(corpus, focal, scratch);
            for (std::size_t vi = 0; vi < variants.size(); ++vi) {
                const auto& v = variants[vi];
                const auto s =
                    score_from_scratch(corpus, focal, scratch, v.b, v.window, v.nr_mode);
                auto& cell = matrix.cell(row, vi);
                cell.n_f = s.n_f;
                cell.n_b = s.n_b;
                cell.n_r = s.n_r;
                cell.value = s.value;
                cell.status = s.status;
            }
        }
    };

    if (workers == 1 || sample.papers.size() < 256) {
        worker_fn(0, sample.papers.size());
    } else {
        std::vector<std::thread> threads;
        const std::size_t n = sample.papers.size();
        const std::size_t chunk = (n + static_cast<std::size_t>(workers) - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::size_t begin = std::min(n, static_cast<std::size_t>(w) * chunk);
            const std::size_t end = std::min(n, begin + chunk);
            if (begin < end) threads.emplace_back(worker_fn, begin, end);
        }
        for (auto& t : threads) t.join();
    }
    return matrix;
}

void ScoreMatrix::write_csv(const Corpus& corpus, const std::filesystem::path& file) const {
    std::ofstream out(file);
    if (!out) throw io_error("cannot write '" + file.string() + "'");
    out << "paper_id,b,window,nr_mode,n_f,n_b,n_r,score\n";
    for (std::size_t row = 0; row < papers_.size(); ++row) {
        const auto& id = corpus.paper(papers_[row]).id;
        for (std::size_t vi = 0; vi < variants_.size(); ++vi) {
            const auto& v = variants_[vi];
            const auto& c = cell(row, vi);
            out << id << ',' << v.b << ',' << v.window.to_string() << ','
                << specverse::to_string(v.nr_mode) << ',' << c.n_f << ',' << c.n_b << ','
                << c.n_r << ',';
            switch (c.status) {
                case ScoreStatus::ok: out << format_double(c.value); break;
                case ScoreStatus::undefined_score: out << "undefined"; break;
                case ScoreStatus::zero_refs: out << "zero_refs"; break;
            }
            out << '\n';
        }
    }
    if (!out) throw io_error("write failed on '" + file.string() + "'");
}

ScoreMatrix ScoreMatrix::read_csv(const Corpus& corpus, const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw io_error("cannot open '" + file.string() + "'");
    DelimitedReader reader(in, file.string());
    const auto id_col = reader.require_column("paper_id");
    const auto b_col = reader.require_column("b");
    const auto w_col = reader.require_column("window");
    const auto m_col = reader.require_column("nr_mode");
    const auto nf_col = reader.require_column("n_f");
    const auto nb_col = reader.require_column("n_b");
    const auto nr_col = reader.require_column("n_r");
    const auto score_col = reader.require_column("score");

    struct RawCell {
        PaperIndex paper;
        ScoreVariant variant;
        ScoreCell cell;
    };
    std::vector<RawCell> raw;
    std::vector<ScoreVariant> variants;
    std::vector<PaperIndex> papers;

    std::vector<std::string> row;
    while (reader.next_row(row)) {
        const auto paper = corpus.find_paper(row[id_col]);
        if (!paper) {
            throw schema_error(file.string() + ":" + std::to_string(reader.line_number()) +
                               ": unknown paper '" + row[id_col] + "'");
        }
        ScoreVariant v;
        v.b = static_cast<int>(reader.parse_int(row[b_col], "b"));
        v.window = WindowSpec::parse(row[w_col]);
        v.nr_mode = parse_nr_mode(row[m_col]);

        ScoreCell c;
        c.n_f = reader.parse_int(row[nf_col], "n_f");
        c.n_b = reader.parse_int(row[nb_col], "n_b");
        c.n_r = reader.parse_int(row[nr_col], "n_r");
        const auto& s = row[score_col];
        if (s == "undefined") {
            c.status = ScoreStatus::undefined_score;
        } else if (s == "zero_refs") {
            c.status = ScoreStatus::zero_refs;
        } else {
            c.status = ScoreStatus::ok;
            c.value = reader.parse_double(s, "score");
        }

        if (std::find(variants.begin(), variants.end(), v) == variants.end()) variants.push_back(v);
        if (papers.empty() || papers.back() != *paper) papers.push_back(*paper);
        raw.push_back({*paper, v, c});
    }

    std::sort(papers.begin(), papers.end());
    papers.erase(std::unique(papers.begin(), papers.end()), papers.end());

    ScoreMatrix matrix(std::move(papers), std::move(variants));
    std::vector<char> seen(matrix.papers_.size() * matrix.variants_.size(), 0);
    for (const auto& rc : raw) {
        const auto r = matrix.row_of(rc.paper);
        const auto vi = matrix.find_variant(rc.variant);
        const auto idx = *r * matrix.variants_.size() + *vi;
        if (seen[idx]) {
            throw schema_error(file.string() + ": duplicate cell for paper '" +
                               corpus.paper(rc.paper).id + "' variant " + rc.variant.to_string());
        }
        seen[idx] = 1;
        matrix.cells_[idx] = rc.cell;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) {
            throw schema_error(file.string() + ": incomplete score matrix (missing cells)");
        }
    }
    return matrix;
}

}  // namespace specverse
