#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specverse/corpus.hpp"
#include "specverse/window.hpp"

namespace specverse {

// Whether the coupling threshold b also applies to non-citing coupled papers
// (N_R). `consistent` uses the same threshold everywhere; `legacy` keeps the
// historical convention of counting any non-citer with at least one shared
// reference. The two coincide at b = 1.
enum class NrMode { consistent, legacy };

const char* to_string(NrMode mode);
NrMode parse_nr_mode(std::string_view text);

struct CouplingEntry {
    PaperIndex paper;
    int year;
    bool cites_focal;
    int strength;  // shared references with the focal
};

struct CouplingProfile {
    PaperIndex focal;
    WindowSpec window;
    std::vector<CouplingEntry> entries;  // ascending by paper index
};

enum class ScoreStatus : std::uint8_t {
    ok,
    undefined_score,  // N_F + N_B + N_R = 0
    zero_refs,        // focal has no linked references
};

struct DisruptionScore {
    PaperIndex focal = -1;
    int threshold_b = 1;
    WindowSpec window;
    NrMode nr_mode = NrMode::consistent;
    std::int64_t n_f = 0;
    std::int64_t n_b = 0;
    std::int64_t n_r = 0;
    double value = 0.0;
    ScoreStatus status = ScoreStatus::ok;
};

/// Candidate set around a focal paper: its in-window citers plus in-window
/// citers of any of its references, each with its full-reference-list
/// coupling strength. Throws a validation error for a focal without linked
/// references (the degenerate maximum-score artefact).
CouplingProfile coupling_profile(const Corpus& corpus, PaperIndex focal,
                                 const WindowSpec& window);

DisruptionScore disruption_score(const CouplingProfile& profile, int b, NrMode nr_mode);

std::int64_t citation_count(const Corpus& corpus, PaperIndex focal, const WindowSpec& window);

struct ScoreVariant {
    int b = 1;
    WindowSpec window;
    NrMode nr_mode = NrMode::consistent;

    bool operator==(const ScoreVariant&) const = default;
    std::string to_string() const;  // "DI3@10y/consistent"
};

struct ScoreCell {
    std::int64_t n_f = 0;
    std::int64_t n_b = 0;
    std::int64_t n_r = 0;
    double value = 0.0;
    ScoreStatus status = ScoreStatus::ok;
};

/// Scores for every (sample paper, variant) pair. Rows follow the sample
/// order (ascending paper index); per-paper failures are markers, never
/// batch aborts.
class ScoreMatrix {
public:
    ScoreMatrix() = default;
    ScoreMatrix(std::vector<PaperIndex> papers, std::vector<ScoreVariant> variants);

    std::span<const PaperIndex> papers() const { return papers_; }
    std::span<const ScoreVariant> variants() const { return variants_; }

    std::optional<std::size_t> find_variant(const ScoreVariant& v) const;
    std::optional<std::size_t> row_of(PaperIndex paper) const;

    const ScoreCell& cell(std::size_t row, std::size_t variant) const {
        return cells_[row * variants_.size() + variant];
    }
    ScoreCell& cell(std::size_t row, std::size_t variant) {
        return cells_[row * variants_.size() + variant];
    }

    void write_csv(const Corpus& corpus, const std::filesystem::path& file) const;
    static ScoreMatrix read_csv(const Corpus& corpus, const std::filesystem::path& file);

private:
    std::vector<PaperIndex> papers_;
    std::vector<ScoreVariant> variants_;
    std::vector<ScoreCell> cells_;
};

struct BatchOptions {
    int workers = 1;
};

/// Computes all variants for all sample papers, sharing one coupling pass
/// per focal paper across thresholds, windows, and N_R modes.
ScoreMatrix batch_scores(const Corpus& corpus, const SampleView& sample,
                         const std::vector<ScoreVariant>& variants,
                         const BatchOptions& options = {});

}  // namespace specverse
