#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "lidbounds/bounds.hpp"
#include "lidbounds/experiment.hpp"

using namespace lidbounds;

namespace {

// Triple with prescribed y and δx; only the scalar fields are consulted.
PerturbationTriple scalar_triple(double x, double delta, double y) {
    PerturbationTriple t;
    t.x = x;
    t.delta = delta;
    t.y = y;
    const double c = (delta * delta + 1.0 - (y / x) * (y / x)) / (2.0 * delta);
    t.cos_theta = std::clamp(c, -1.0, 1.0);
    t.theta = std::acos(t.cos_theta);
    return t;
}

} // namespace

TEST(Phi, Examples) {
    EXPECT_DOUBLE_EQ(phi(2.0, 1.0, 0.1), 1.05);
    for (double eta : {0.01, 0.3, 0.9}) {
        EXPECT_DOUBLE_EQ(phi(1.0, 1.0, eta), std::min(1.0 + eta, 1.0 / (1.0 - eta)));
        EXPECT_DOUBLE_EQ(phi(1.0, 1.0, eta), 1.0 + eta);
    }
    EXPECT_NEAR(phi(2.0, 1.0, 1e-12), 1.0, 1e-11);
    EXPECT_THROW(phi(1.0, 1.0, 1.0), Error);
    EXPECT_THROW(phi(1.0, 2.0, 0.6), Error);
}

TEST(EtaGrid, CapsAndSpacing) {
    const auto t = scalar_triple(2.0, 0.5, 2.0); // y = 2, δx = 1
    const auto grid = eta_grid(t, 10.0, BoundKind::sandwich, 50);
    ASSERT_EQ(grid.size(), 50u);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        EXPECT_DOUBLE_EQ(grid[j].cap1, 1.0);
        EXPECT_GT(grid[j].eta, kEtaFloor);
        EXPECT_LT(grid[j].eta, 1.0);
        EXPECT_NEAR(grid[j].cap2, 10.0 * std::log(phi(2.0, 1.0, grid[j].eta)) / std::log(2.0), 1e-12);
        EXPECT_EQ(grid[j].feasible, grid[j].eta < grid[j].cap2);
        if (j) {
            EXPECT_NEAR(std::log(grid[j].eta) - std::log(grid[j - 1].eta), std::log(1.0 / kEtaFloor) / 51, 1e-12);
        }
    }
    // hand value of the second cap at η = 0.1
    EXPECT_NEAR(10.0 * std::log(phi(2.0, 1.0, 0.1)) / std::log(2.0), 0.7039, 5e-5);
}

TEST(EtaGrid, EmptyDirectionalIntervalAndShrinkingRatio) {
    const auto wide = planar_triple(1.0, 2.0, std::numbers::pi); // y = 3, δx = 2
    const auto grid = eta_grid(wide, 5.0, BoundKind::directional_away, 50);
    ASSERT_FALSE(grid.empty());
    for (const auto& e : grid) EXPECT_FALSE(e.feasible);

    const auto inside = planar_triple(1.0, 0.8, 0.0); // y = 0.2 < δx
    EXPECT_TRUE(eta_grid(inside, 5.0, BoundKind::sandwich, 50).empty());

    try {
        eta_grid(scalar_triple(2.0, 0.5, 1.0), 5.0, BoundKind::sandwich, 50);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::degenerate);
    }
}

TEST(SandwichBounds, PowerLawExample) {
    const PowerLawCdf f(2.0, 10.0);
    const auto r = sandwich_bounds(scalar_triple(2.0, 0.5, 2.0), f, 0.1);
    EXPECT_NEAR(r.lower, std::log(4.0) / std::log(2.1), 1e-13);
    EXPECT_NEAR(r.upper, std::log(4.0) / std::log(1.9), 1e-13);
    EXPECT_NEAR(r.lower, 1.8685, 1e-4);
    EXPECT_NEAR(r.upper, 2.1598, 1e-4);
    EXPECT_LE(r.lower, 2.0);
    EXPECT_GE(r.upper, 2.0);
    EXPECT_FALSE(r.unstable);
    EXPECT_EQ(r.kind, BoundKind::sandwich);
}

TEST(SandwichBounds, CollapsesAsEtaVanishes) {
    for (double m : {1.0, 3.5, 10.0}) {
        const PowerLawCdf f(m, 10.0);
        const auto r = sandwich_bounds(scalar_triple(1.0, 0.6, 1.3), f, 1e-9);
        EXPECT_NEAR(r.lower, m, 1e-6 * m);
        EXPECT_NEAR(r.upper, m, 1e-6 * m);
    }
}

TEST(SandwichBounds, WidthMonotoneInEta) {
    const PowerLawCdf f(4.0, 10.0);
    const auto t = scalar_triple(1.0, 0.4, 1.1);
    double prev_lo = INFINITY, prev_hi = -INFINITY;
    for (const auto& e : eta_grid(t, 4.0, BoundKind::sandwich, 50)) {
        const auto r = sandwich_bounds(t, f, e.eta);
        EXPECT_LE(r.lower, prev_lo);
        EXPECT_GE(r.upper, prev_hi);
        EXPECT_LE(r.lower, r.upper);
        prev_lo = r.lower;
        prev_hi = r.upper;
    }
}

TEST(SandwichBounds, ZeroCdfAndDegenerateErrors) {
    const auto shifted = [](double r) { return r < 0.5 ? 0.0 : r; };
    try {
        sandwich_bounds(scalar_triple(1.0, 0.3, 1.0), shifted, 0.1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::numeric);
    }
    // toward at θ = 0 with δ = 0.5 puts b midway: y = δx
    EXPECT_THROW(sandwich_bounds(planar_triple(1.0, 0.5, 0.0), PowerLawCdf(2.0, 10.0), 0.1), Error);
}

TEST(BoundPair, FlagsInstability) {
    EXPECT_TRUE(bound_pair(1.0, 1.0 + 1e-13, 1e-14).unstable);
    EXPECT_TRUE(bound_pair(1.0, 1.05, 0.1).unstable); // ln(0.95) < 0 < ln(1.15)
    EXPECT_FALSE(bound_pair(1.0, 2.0, 0.1).unstable);
    EXPECT_THROW(bound_pair(1.0, 0.5, 0.5), Error);
}

TEST(DirectionalBounds, AwayTightensTheLowerBound) {
    const PowerLawCdf f(2.0, 10.0);
    const auto t = planar_triple(1.0, 0.5, std::numbers::pi / 2);
    ASSERT_EQ(direction_class(t), Direction::away);
    EXPECT_NEAR(t.y / t.delta_x(), std::sqrt(1.25) / 0.5, 1e-12);
    const auto s = sandwich_bounds(t, f, 0.05);
    const auto d = directional_bounds(t, f, 0.05);
    EXPECT_EQ(d.kind, BoundKind::directional_away);
    EXPECT_GT(std::log(t.y / t.delta_x() + 0.05), std::log(1.0 / 0.5 + 0.05));
    EXPECT_GT(d.lower, s.lower);
    EXPECT_GT(d.upper, s.upper);
    EXPECT_NEAR(d.lower, std::log(1.25 / 0.25) / std::log(2.05), 1e-12);
}

TEST(DirectionalBounds, TowardLoosensBothBounds) {
    const PowerLawCdf f(2.0, 10.0);
    const auto t = planar_triple(1.0, 0.3, 0.0); // y = 0.7, δx = 0.3
    ASSERT_EQ(direction_class(t), Direction::toward);
    ASSERT_LT(t.y / t.delta_x(), 1.0 / t.delta);
    const auto s = sandwich_bounds(t, f, 0.1);
    const auto d = directional_bounds(t, f, 0.1);
    EXPECT_EQ(d.kind, BoundKind::directional_toward);
    EXPECT_LT(d.lower, s.lower);
    EXPECT_LT(d.upper, s.upper);
}

TEST(DirectionalBounds, BoundaryGeometryMakesBothVariantsEqual) {
    const PowerLawCdf f(3.0, 10.0);
    const auto t = planar_triple(1.0, 0.5, std::acos(0.25)); // δ = 2cos θ
    EXPECT_NEAR(t.y, t.x, 1e-12);
    EXPECT_EQ(direction_class(t), Direction::boundary);
    const auto s = sandwich_bounds(t, f, 0.1);
    const auto d = bound_pair(log_cdf_ratio(f, t), 1.0 / t.delta, 0.1);
    EXPECT_NEAR(s.lower, d.lower, 1e-9 * s.lower);
    EXPECT_NEAR(s.upper, d.upper, 1e-9 * s.upper);
    try {
        directional_bounds(t, f, 0.1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::degenerate);
    }
}

TEST(DirectionalBounds, Preconditions) {
    const PowerLawCdf f(2.0, 10.0);
    EXPECT_THROW(directional_bounds(planar_triple(1.0, 1.5, 2.0), f, 0.1), Error);
    EXPECT_THROW(directional_bounds(planar_triple(1.0, 0.5, 2.0), f, 1.5), Error);
}

TEST(AveragedBounds, PowerLawAverageContainsExponent) {
    const PowerLawCdf f(6.0, 10.0);
    const auto t = planar_triple(1.0, 0.7, 2.0);
    const auto avg = averaged_bounds(t, f, 6.0, 50);
    ASSERT_GT(avg.n_feasible, 0u);
    EXPECT_LE(avg.lower_mean, 6.0);
    EXPECT_GE(avg.upper_mean, 6.0);
    EXPECT_TRUE(std::isnan(averaged_bounds(planar_triple(1.0, 0.8, 0.0), f, 6.0, 50).lower_mean));
}

TEST(SandwichBounds, MnistQueryContainsTheEstimateForMostEta) {
    const std::filesystem::path root = LIDBOUNDS_DATA_DIR;
    const auto full = load_mnist(root / "mnist/mnist5k-images-idx3-ubyte", root / "mnist/mnist5k-labels-idx1-ubyte");
    ExperimentConfig cfg;
    const auto sub = sweep_subsample(full, cfg);
    const auto queries = select_queries(sub.size(), cfg.n_q, cfg.seed);
    const auto model = sweep_surrogate(sub, cfg);
    const std::size_t q = queries.front();
    const auto dir = attack_direction(model, sub.row(q), sub.label(q));
    const auto reference = knn(sub, q, cfg.k).indices[cfg.k / 2 - 1];
    const auto t = make_triple(sub.row(q), dir, 1.0, sub.row(reference));
    const auto cdf = fit_cdf(all_distances(sub, t.b));
    const double lid = mle_lid(knn(sub, t.b, cfg.k)).value;

    std::size_t feasible = 0, contained = 0;
    for (const auto& e : eta_grid(t, lid, BoundKind::sandwich, cfg.eta_grid_size)) {
        if (!e.feasible) continue;
        ++feasible;
        const auto r = sandwich_bounds(t, cdf, e.eta);
        contained += r.lower <= lid && lid <= r.upper;
    }
    ASSERT_GT(feasible, 0u);
    EXPECT_GE(static_cast<double>(contained), 0.9 * static_cast<double>(feasible))
        << contained << " of " << feasible << " feasible eta contain " << lid;
}
