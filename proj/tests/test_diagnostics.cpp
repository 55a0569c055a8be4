#include <doctest.h>

#include <cmath>

#include "rfi/diagnostics.hpp"
#include "rfi/errors.hpp"
#include "rfi/rng.hpp"

using namespace rfi;

TEST_SUITE_BEGIN("diagnostics");

TEST_CASE("shrink factor hand computation") {
    // {0,2} and {10,12}: W = 2, B = 2*var({1,11}) = 100, SF = sqrt((0.5*2+50)/2)
    std::vector<std::vector<double>> chains = {{0.0, 2.0}, {10.0, 12.0}};
    CHECK(shrink_factor(chains) == doctest::Approx(std::sqrt(25.5)).epsilon(1e-12));
}

TEST_CASE("identical chain means give the lower bound sqrt((L-1)/L)") {
    std::vector<double> base(100);
    for (int i = 0; i < 100; ++i) base[i] = std::sin(0.37 * i);
    std::vector<std::vector<double>> chains = {base, base, base};
    CHECK(shrink_factor(chains) == doctest::Approx(std::sqrt(99.0 / 100.0)).epsilon(1e-12));
}

TEST_CASE("shrink factor is invariant to common affine maps") {
    Rng rng(7);
    std::vector<std::vector<double>> chains(4, std::vector<double>(50));
    for (auto& c : chains)
        for (auto& v : c) v = rng.gaussian(0.3, 1.7);
    double sf = shrink_factor(chains);
    for (auto& c : chains)
        for (auto& v : c) v = -2.5 * v + 40.0;
    CHECK(shrink_factor(chains) == doctest::Approx(sf).epsilon(1e-12));
}

TEST_CASE("shrink factor input validation") {
    CHECK_THROWS_AS(shrink_factor({{1.0, 2.0}}), ValidationError);
    CHECK_THROWS_AS(shrink_factor({{1.0, 2.0}, {1.0}}), ValidationError);
    CHECK_THROWS_AS(shrink_factor({{1.0, 1.0}, {2.0, 2.0}}), NumericalError);
}

TEST_CASE("trajectory strides prefixes and always ends at the full length") {
    Rng rng(9);
    std::vector<std::vector<double>> chains(3, std::vector<double>(130));
    for (auto& c : chains)
        for (auto& v : c) v = rng.gaussian();
    auto traj = shrink_trajectory(chains, 50);
    REQUIRE(traj.size() == 3);
    CHECK(traj[0].iteration == 50);
    CHECK(traj[1].iteration == 100);
    CHECK(traj[2].iteration == 130);
    std::vector<std::vector<double>> p50;
    for (const auto& c : chains) p50.emplace_back(c.begin(), c.begin() + 50);
    CHECK(traj[0].sf == doctest::Approx(shrink_factor(p50)).epsilon(1e-12));
}

TEST_CASE("rank correlation basics and tie handling") {
    std::vector<double> x = {1, 2, 3, 4, 5};
    std::vector<double> rev = {5, 4, 3, 2, 1};
    CHECK(spearman(x, x) == doctest::Approx(1.0));
    CHECK(spearman(x, rev) == doctest::Approx(-1.0));
    // monotone transform invariance
    std::vector<double> ex(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) ex[i] = std::exp(x[i]);
    std::vector<double> y = {2.0, -1.0, 0.5, 9.0, 3.0};
    CHECK(spearman(ex, y) == doctest::Approx(spearman(x, y)).epsilon(1e-12));
    // ties get mean ranks
    auto r = average_ranks({1.0, 2.0, 2.0, 3.0});
    CHECK(r[1] == doctest::Approx(2.5));
    CHECK(r[2] == doctest::Approx(2.5));
    CHECK_THROWS_AS(spearman({1.0, 1.0}, {1.0, 2.0}), NumericalError);
    CHECK_THROWS_AS(spearman({1.0}, {1.0}), ValidationError);
}

TEST_CASE("summary statistics") {
    std::vector<double> s(100);
    for (int i = 0; i < 100; ++i) s[i] = i + 1;
    auto sum = summarize(s);
    CHECK(sum.median == doctest::Approx(50.5));
    CHECK(sum.mean == doctest::Approx(50.5));
    std::vector<double> constant(10, 3.0);
    auto c = summarize(constant);
    CHECK(c.sd == doctest::Approx(0.0));
    CHECK(c.q025 == doctest::Approx(3.0));
    CHECK(c.q975 == doctest::Approx(3.0));

    Rng rng(123);
    std::vector<double> z(100000);
    for (auto& v : z) v = rng.gaussian();
    auto zs = summarize(z);
    CHECK(std::abs(zs.mean) < 0.02);
    CHECK(std::abs(zs.sd - 1.0) < 0.02);
    CHECK(zs.q025 == doctest::Approx(-1.96).epsilon(0.03));
}

TEST_SUITE_END();
