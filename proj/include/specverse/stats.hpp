#pragma once

#include <span>
#include <vector>

namespace specverse {

double mean(std::span<const double> values);
// Sample standard deviation (n-1 denominator).
double sample_sd(std::span<const double> values);
// Population variance (1/n denominator).
double population_variance(std::span<const double> values);

// Percentile in [0,100] by linear interpolation between order statistics
// (rank = p/100 * (n-1), zero-based).
double percentile(std::vector<double> values, double p);

// Two-sided p-value for a t statistic with `dof` degrees of freedom.
double t_p_value(double t_stat, double dof);
// Upper quantile t_{1-alpha/2, dof}, for confidence limits.
double t_critical(double alpha, double dof);

struct KdePoint {
    double x;
    double density;
};

// Gaussian kernel density on an even grid, Silverman's rule-of-thumb
// bandwidth. Returns empty when the sample is degenerate (n < 2 or zero
// spread), which callers must treat as "skip the export".
std::vector<KdePoint> gaussian_kde(std::span<const double> values, int grid_points = 512);

}  // namespace specverse
