#include "rfi/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rfi/errors.hpp"

namespace rfi {

namespace {

double mean_of(const std::vector<double>& x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double var_of(const std::vector<double>& x) {
    double m = mean_of(x), acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return acc / static_cast<double>(x.size() - 1);
}

}  // namespace

double shrink_factor(const std::vector<std::vector<double>>& chains) {
    const std::size_t m = chains.size();
    if (m < 2) throw ValidationError("shrink factor needs at least two chains");
    const std::size_t L = chains.front().size();
    if (L < 2) throw ValidationError("shrink factor needs chain length >= 2");
    for (const auto& c : chains)
        if (c.size() != L) throw ValidationError("shrink factor needs equal chain lengths");

    std::vector<double> means(m);
    double W = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        means[c] = mean_of(chains[c]);
        W += var_of(chains[c]);
    }
    W /= static_cast<double>(m);
    if (W <= 0.0) throw NumericalError("within-chain variance is zero; chains are degenerate");
    double B = static_cast<double>(L) * var_of(means);
    double Ld = static_cast<double>(L);
    return std::sqrt(((Ld - 1.0) / Ld * W + B / Ld) / W);
}

std::vector<ShrinkPoint> shrink_trajectory(const std::vector<std::vector<double>>& chains,
                                           int stride) {
    if (stride < 1) throw ValidationError("shrink trajectory stride must be >= 1");
    if (chains.empty()) throw ValidationError("shrink trajectory needs chains");
    const int L = static_cast<int>(chains.front().size());
    std::vector<ShrinkPoint> out;
    for (int it = stride; it <= L; it += stride) {
        std::vector<std::vector<double>> prefixes;
        prefixes.reserve(chains.size());
        for (const auto& c : chains)
            prefixes.emplace_back(c.begin(), c.begin() + it);
        out.push_back({it, shrink_factor(prefixes)});
    }
    if (out.empty() || out.back().iteration != L) {
        if (L >= 2) out.push_back({L, shrink_factor(chains)});
    }
    return out;
}

std::vector<double> average_ranks(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
        i = j + 1;
    }
    return ranks;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ValidationError("rank correlation needs two equal-length vectors (n >= 2)");
    auto rx = average_ranks(x), ry = average_ranks(y);
    double mx = mean_of(rx), my = mean_of(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0)
        throw NumericalError("rank correlation undefined for a constant vector");
    return sxy / std::sqrt(sxx * syy);
}

SummaryStats summarize(const std::vector<double>& samples) {
    if (samples.size() < 2) throw ValidationError("summary needs at least two samples");
    SummaryStats s;
    s.mean = mean_of(samples);
    s.sd = std::sqrt(var_of(samples));
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double p) {
        double pos = p * static_cast<double>(sorted.size() - 1);
        std::size_t lo = static_cast<std::size_t>(pos);
        if (lo + 1 >= sorted.size()) return sorted.back();
        double frac = pos - static_cast<double>(lo);
        return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
    };
    s.q025 = quantile(0.025);
    s.median = quantile(0.5);
    s.q975 = quantile(0.975);
    return s;
}

}  // namespace rfi
