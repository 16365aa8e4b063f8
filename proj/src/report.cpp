#include "specverse/report.hpp"

#include <iomanip>
#include <sstream>

#include "specverse/csv.hpp"

namespace specverse {

namespace {

std::string pad(const std::string& text, std::size_t width, bool right = false) {
    if (text.size() >= width) return text;
    const std::string fill(width - text.size(), ' ');
    return right ? fill + text : text + fill;
}

std::string pct(double share) {
    return format_rounded(100.0 * share, 1) + "%";
}

}  // namespace

std::string render_sign_table(const MultiverseSummary& summary) {
    const auto& s = summary.signs;
    std::ostringstream os;
    os << "Sign stability of the estimates (alpha = " << format_rounded(summary.alpha, 2) << ")\n";
    os << pad("Statistically significant", 28) << pad("Negative", 10, true)
       << pad("Positive", 10, true) << pad("Total", 10, true) << '\n';
    os << pad("No", 28) << pad(std::to_string(s.negative_ns), 10, true)
       << pad(std::to_string(s.positive_ns), 10, true)
       << pad(std::to_string(s.negative_ns + s.positive_ns), 10, true) << '\n';
    os << pad("Yes", 28) << pad(std::to_string(s.negative_significant), 10, true)
       << pad(std::to_string(s.positive_significant), 10, true)
       << pad(std::to_string(s.negative_significant + s.positive_significant), 10, true) << '\n';
    os << pad("Total", 28) << pad(std::to_string(s.negative_ns + s.negative_significant), 10, true)
       << pad(std::to_string(s.positive_ns + s.positive_significant), 10, true)
       << pad(std::to_string(s.total()), 10, true) << '\n';
    return os.str();
}

std::string render_influence_table(const std::vector<InfluenceStat>& stats,
                                   const EstimateSet& set) {
    std::ostringstream os;
    os << "Influence of modeling decisions on the team-size coefficient\n";
    if (set.benchmark && set.benchmark->status == ModelStatus::ok) {
        os << "Benchmark (" << set.universe.benchmark_label
           << "): " << format_rounded(set.benchmark->estimate, 4) << "\n";
    }
    os << pad("Dimension", 22) << pad("Option", 22) << pad("Delta", 12, true)
       << pad("Pairs", 8, true) << pad("% of benchmark", 16, true) << '\n';
    std::string last_dim;
    for (const auto& dim : set.universe.dimensions) {
        bool first = true;
        for (const auto& stat : stats) {
            if (stat.dimension != dim.name) continue;
            if (first) {
                os << pad(dim.name, 22) << pad(dim.reference + " (reference)", 22)
                   << pad("", 12, true) << pad("", 8, true) << pad("", 16, true) << '\n';
                first = false;
            }
            os << pad("", 22) << pad(stat.option, 22) << pad(format_rounded(stat.delta, 4), 12, true)
               << pad(std::to_string(stat.n_pairs), 8, true)
               << pad(stat.percent_of_benchmark
                          ? format_rounded(*stat.percent_of_benchmark, 0) + "%"
                          : std::string("-"),
                      16, true)
               << '\n';
        }
    }
    (void)last_dim;
    return os.str();
}

std::string render_robustness_table(const MultiverseSummary& summary, const std::string& name) {
    std::ostringstream os;
    os << "Model robustness statistics\n";
    os << pad("Model space", 20) << pad("Models", 8, true) << pad("Mean (b)", 12, true)
       << pad("Model SD", 12, true) << pad("Sign stability", 16, true) << '\n';
    const double share = summary.k_ok == 0
                             ? 0.0
                             : static_cast<double>(summary.signs.negative_significant) /
                                   static_cast<double>(summary.k_ok);
    os << pad(name, 20) << pad(std::to_string(summary.k_ok), 8, true)
       << pad(format_rounded(summary.b_mean, 4), 12, true)
       << pad(format_rounded(summary.model_sd, 4), 12, true) << pad(pct(share), 16, true) << '\n';
    return os.str();
}

std::string render_extremes_table(const EstimateSet& set) {
    const auto [min_row, max_row] = extremes(set);
    std::ostringstream os;
    os << "Minimum and maximum estimates from the multiverse\n";
    os << pad("Which", 8);
    for (const auto& d : set.universe.dimensions) os << pad(d.name, 20);
    os << pad("Estimate", 12, true) << pad("SE", 12, true) << pad("p", 10, true) << '\n';
    auto line = [&](const char* which, const ModelRow& row) {
        os << pad(which, 8);
        for (std::size_t d = 0; d < set.universe.dimensions.size(); ++d) {
            os << pad(set.universe.dimensions[d].options[row.option_idx[d]], 20);
        }
        os << pad(format_rounded(row.estimate, 4), 12, true)
           << pad(format_rounded(row.se, 5), 12, true);
        os << pad(row.p < 0.001 ? "< 0.001" : format_rounded(row.p, 3), 10, true) << '\n';
    };
    line("min", min_row);
    line("max", max_row);
    return os.str();
}

}  // namespace specverse
