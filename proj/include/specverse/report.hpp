#pragma once

#include <string>
#include <vector>

#include "specverse/multiverse.hpp"

namespace specverse {

// Aligned-text renderings of the multiverse outputs. Human tables round to
// 4 decimals; machine files keep full precision.

std::string render_sign_table(const MultiverseSummary& summary);
std::string render_influence_table(const std::vector<InfluenceStat>& stats,
                                   const EstimateSet& set);
std::string render_robustness_table(const MultiverseSummary& summary, const std::string& name);
std::string render_extremes_table(const EstimateSet& set);

}  // namespace specverse
