#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "lidbounds/dataset.hpp"
#include "lidbounds/error.hpp"
#include "lidbounds/random.hpp"

namespace lidbounds {

enum class SynthKind { uniform_ball_subspace, gaussian_subspace };

/// Points of known intrinsic dimension: latent samples in R^m mapped into
/// R^d through a random orthonormal m-frame.
struct SynthSpec {
    int intrinsic_dim = 1;
    int ambient_dim = 1;
    std::size_t n = 100;
    SynthKind kind = SynthKind::uniform_ball_subspace;
    std::uint64_t seed = 0;
    /// When > 0, points get labels from equal-count bins of the first latent
    /// coordinate (gives the attack surrogate something to separate).
    int n_classes = 0;
};

/// Random d x m matrix with orthonormal columns (thin Q of a Gaussian matrix).
inline Eigen::MatrixXd random_orthonormal_frame(int ambient_dim, int intrinsic_dim, Rng& rng) {
    Eigen::MatrixXd g(ambient_dim, intrinsic_dim);
    for (int j = 0; j < intrinsic_dim; ++j)
        for (int i = 0; i < ambient_dim; ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return qr.householderQ() * Eigen::MatrixXd::Identity(ambient_dim, intrinsic_dim);
}

inline Dataset generate_synthetic(const SynthSpec& spec) {
    require(spec.intrinsic_dim >= 1, "intrinsic dimension must be >= 1");
    require(spec.intrinsic_dim <= spec.ambient_dim,
            "intrinsic dimension " + std::to_string(spec.intrinsic_dim) + " exceeds ambient dimension " +
                std::to_string(spec.ambient_dim));
    require(spec.n >= 1, "sample count must be >= 1");
    require(spec.n_classes >= 0, "class count must be nonnegative");

    const int m = spec.intrinsic_dim;
    const int d = spec.ambient_dim;
    Rng rng(spec.seed);
    const Eigen::MatrixXd frame = random_orthonormal_frame(d, m, rng);

    Eigen::MatrixXd latent(m, static_cast<Eigen::Index>(spec.n));
    for (std::size_t p = 0; p < spec.n; ++p) {
        auto col = latent.col(static_cast<Eigen::Index>(p));
        for (int j = 0; j < m; ++j) col(j) = rng.normal();
        if (spec.kind == SynthKind::uniform_ball_subspace) {
            double norm = col.norm();
            while (norm == 0.0) {
                for (int j = 0; j < m; ++j) col(j) = rng.normal();
                norm = col.norm();
            }
            const double radius = std::pow(rng.uniform(), 1.0 / m);
            col *= radius / norm;
        }
    }

    const Eigen::MatrixXd ambient = frame * latent; // d x n, column-major = row-major n x d
    std::vector<double> values(ambient.data(), ambient.data() + ambient.size());

    std::optional<std::vector<int>> labels;
    if (spec.n_classes > 0) {
        std::vector<std::size_t> order(spec.n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return latent(0, static_cast<Eigen::Index>(a)) < latent(0, static_cast<Eigen::Index>(b));
        });
        auto& l = labels.emplace(spec.n);
        for (std::size_t rank = 0; rank < spec.n; ++rank)
            l[order[rank]] = static_cast<int>(rank * static_cast<std::size_t>(spec.n_classes) / spec.n);
    }

    const std::string name = std::string(spec.kind == SynthKind::uniform_ball_subspace ? "synth-ball" : "synth-gauss") +
                             "-m" + std::to_string(m) + "-d" + std::to_string(d);
    return Dataset(std::move(values), spec.n, static_cast<std::size_t>(d), std::move(labels), name);
}

} // namespace lidbounds
