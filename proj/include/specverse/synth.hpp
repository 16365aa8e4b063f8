#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "specverse/corpus.hpp"
#include "specverse/disruption.hpp"
#include "specverse/regress.hpp"

namespace specverse {

// Team size distribution over 1..max_size: either explicit probabilities or
// a truncated shifted-Poisson whose mean can drift across cohort years.
struct TeamSizeDist {
    std::vector<double> probs;  // sizes 1.. when non-empty; drift ignored
    double mean_year0 = 4.0;
    double drift_per_year = 0.0;
    int min_size = 1;
    int max_size = 15;
};

struct SynthSpec {
    std::uint64_t seed = 42;
    int year_start = 2000;
    int year_end = 2012;
    int papers_year0 = 400;
    double paper_growth = 0.05;    // yearly growth of the cohort size
    double refs_mean_year0 = 15.0;
    double refs_growth = 0.0;      // yearly growth of reference-list length
                                   // (the citation-inflation knob)
    TeamSizeDist team;
    // Shift, per author beyond the first, of the probability that a citer of
    // a paper also picks up that paper's references.
    double planted_delta = 0.0;
    double coupling_base = 0.12;
    double author_effect_sd = 0.03;
    double paper_noise_sd = 0.03;
    int author_pool = 0;            // 0 = sized for ~3 papers per author
    double recency_decay = 0.85;    // attachment weight decay per year of age
    double team_attractiveness = 0.0;  // citation-rate multiplier per extra member
    std::string field_name = "Science";

    void validate() const;
    static SynthSpec from_json_file(const std::filesystem::path& file);
    static SynthSpec from_json_text(const std::string& text, const std::string& source);
};

struct GroundTruth {
    int generator_version = 0;
    std::uint64_t seed = 0;
    double planted_delta = 0.0;
    double coupling_base = 0.0;
    double clamp_rate = 0.0;  // share of coupling probabilities clamped into [0,1]
    std::vector<double> author_effects;    // by corpus author index
    std::vector<double> paper_propensity;  // by corpus paper index
    std::string mechanism;

    void save_json(const Corpus& corpus, const std::filesystem::path& file) const;
};

/// Grows a citation network year by year: cohort sizes grow at
/// `paper_growth`, reference budgets at `refs_growth`; reference lists mix
/// recency-weighted preferential attachment with copying of the cited
/// paper's own references at the planted coupling probability. Deterministic
/// given the seed; never reads the ground truth back.
std::pair<Corpus, GroundTruth> generate(const SynthSpec& spec);

struct SlopeOracle {
    double slope_mean = 0.0;
    double slope_se = 0.0;
    std::size_t corpora = 0;
    std::size_t paper_draws = 0;
};

/// Monte Carlo measurement of the generator's true team-size effect on
/// standardized disruption scores: per corpus, the raw per-variant slope of
/// z-scored DI on team size (valid as a causal slope because the generator
/// assigns everything else independently of team size), averaged over
/// variants, then across `n_corpora` independently seeded corpora. The
/// filter selects the same population the analysis pipeline runs on.
SlopeOracle true_slope_oracle(const SynthSpec& spec, const std::vector<ScoreVariant>& variants,
                              int n_corpora, const FilterSpec& filter = FilterSpec{});

struct ProbeReport {
    double w_estimate = 0.0, w_se = 0.0, w_p = 1.0;
    double ctrl_estimate = 0.0, ctrl_se = 0.0, ctrl_p = 1.0;
    double true_slope = 0.0;
    bool controlled_closer = false;
    std::size_t sample_size = 0;
};

/// Fits the uncontrolled and the citation-controlled specification on one
/// generated corpus and reports both against the true slope.
ProbeReport bias_probe(const Corpus& corpus, const GroundTruth& truth, const ModelSpec& w_spec,
                       const ModelSpec& controlled_spec, double true_slope,
                       int min_papers_per_author = 2);

/// Default probe pair, both author fixed effects with field dummies. The
/// uncontrolled side has no year dummies and no citation controls (an
/// inflation-blind specification); the controlled side adds year dummies and
/// the log-quadratic citation and reference terms.
ModelSpec w_style_probe_spec(int horizon_year);
ModelSpec controlled_probe_spec(int horizon_year);

}  // namespace specverse
