#include "specverse/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "specverse/error.hpp"

namespace specverse {

double mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

double population_variance(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return ss / static_cast<double>(n);
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw numeric_error("percentile of empty sample");
    if (p < 0.0 || p > 100.0) throw numeric_error("percentile out of [0,100]");
    std::sort(values.begin(), values.end());
    const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = static_cast<std::size_t>(std::ceil(rank));
    if (lo == hi) return values[lo];
    const double frac = rank - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

double t_p_value(double t_stat, double dof) {
    if (dof <= 0.0) return 1.0;
    boost::math::students_t dist(dof);
    const double tail = boost::math::cdf(boost::math::complement(dist, std::fabs(t_stat)));
    return std::min(1.0, 2.0 * tail);
}

double t_critical(double alpha, double dof) {
    if (dof <= 0.0) throw numeric_error("t quantile needs positive dof");
    boost::math::students_t dist(dof);
    return boost::math::quantile(dist, 1.0 - alpha / 2.0);
}

std::vector<KdePoint> gaussian_kde(std::span<const double> values, int grid_points) {
    const std::size_t n = values.size();
    if (n < 2 || grid_points < 2) return {};

    const double sd = sample_sd(values);
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double q1 = percentile(sorted, 25.0);
    const double q3 = percentile(sorted, 75.0);
    const double iqr = q3 - q1;

    double spread = sd;
    if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
    const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
    if (!(h > 0.0)) return {};  // degenerate sample

    const double lo = sorted.front() - 3.0 * h;
    const double hi = sorted.back() + 3.0 * h;
    const double step = (hi - lo) / static_cast<double>(grid_points - 1);

    std::vector<KdePoint> out(static_cast<std::size_t>(grid_points));
    const double norm = 1.0 / (static_cast<double>(n) * h * std::sqrt(2.0 * M_PI));
    for (int g = 0; g < grid_points; ++g) {
        const double x = lo + step * g;
        double acc = 0.0;
        for (double v : sorted) {
            const double z = (x - v) / h;
            acc += std::exp(-0.5 * z * z);
        }
        out[static_cast<std::size_t>(g)] = {x, acc * norm};
    }
    return out;
}

}  // namespace specverse
