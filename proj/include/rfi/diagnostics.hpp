#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rfi {

/// Between/within-chain shrink factor for one parameter. chains holds equal
/// length sample sequences, one per chain.
double shrink_factor(const std::vector<std::vector<double>>& chains);

struct ShrinkPoint {
    int iteration;
    double sf;
};

/// Shrink factor evaluated on growing prefixes (stride apart, final point
/// always included).
std::vector<ShrinkPoint> shrink_trajectory(const std::vector<std::vector<double>>& chains,
                                           int stride = 50);

/// Average ranks in [1, n] with ties sharing their mean rank.
std::vector<double> average_ranks(const std::vector<double>& x);

/// Rank correlation: Pearson correlation of average-ranked data.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct SummaryStats {
    double mean = 0.0, sd = 0.0;
    double q025 = 0.0, median = 0.0, q975 = 0.0;
};

/// Mean, SD (n-1), and 2.5/50/97.5 percent quantiles by linear interpolation
/// of order statistics.
SummaryStats summarize(const std::vector<double>& samples);

}  // namespace rfi
