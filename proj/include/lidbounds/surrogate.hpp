#pragma once

// Multinomial logistic regression used as the attacked model: it only has to
// supply a loss gradient with respect to the input.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "lidbounds/dataset.hpp"
#include "lidbounds/error.hpp"
#include "lidbounds/random.hpp"

namespace lidbounds {

struct AttackModel {
    int classes = 0;
    std::size_t dim = 0;
    std::vector<double> weights; // classes x dim, row-major
    std::vector<double> bias;    // classes
    int epochs = 0;
    double learning_rate = 0;
    std::uint64_t seed = 0;

    std::span<const double> weight_row(int c) const {
        return std::span<const double>(weights).subspan(static_cast<std::size_t>(c) * dim, dim);
    }
};

/// Softmax class probabilities.
inline std::vector<double> predict_proba(const AttackModel& model, Point p) {
    require(p.size() == model.dim, "point dimension does not match the model");
    std::vector<double> z(static_cast<std::size_t>(model.classes));
    for (int c = 0; c < model.classes; ++c) {
        const auto w = model.weight_row(c);
        z[c] = std::inner_product(w.begin(), w.end(), p.begin(), model.bias[c]);
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        total += v;
    }
    for (double& v : z) v /= total;
    return z;
}

inline int predict(const AttackModel& model, Point p) {
    const auto prob = predict_proba(model, p);
    return static_cast<int>(std::max_element(prob.begin(), prob.end()) - prob.begin());
}

/// Cross-entropy -ln p(label | p).
inline double loss(const AttackModel& model, Point p, int label) {
    require(label >= 0 && label < model.classes, "label out of range");
    const auto prob = predict_proba(model, p);
    return -std::log(std::max(prob[label], 1e-300));
}

inline double accuracy(const AttackModel& model, const Dataset& data) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) hits += predict(model, data.row(i)) == data.label(i);
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

/// Mini-batch gradient descent on mean cross-entropy from zero weights.
/// Batches follow a seeded shuffle per epoch and are accumulated in a fixed
/// order, so the result is a pure function of (data, epochs, lr, seed).
inline AttackModel train_surrogate(const Dataset& data, int epochs, double lr, std::uint64_t seed,
                                   std::size_t batch_size = 32) {
    require(data.has_labels(), "the attack surrogate needs labelled data");
    require(epochs >= 1, "epochs must be >= 1");
    require(lr > 0, "learning rate must be positive");
    require(batch_size >= 1, "batch size must be >= 1");
    const int classes = data.num_classes();
    require(classes >= 2, "the attack surrogate needs at least 2 classes");

    AttackModel m;
    m.classes = classes;
    m.dim = data.dim();
    m.weights.assign(static_cast<std::size_t>(classes) * m.dim, 0.0);
    m.bias.assign(static_cast<std::size_t>(classes), 0.0);
    m.epochs = epochs;
    m.learning_rate = lr;
    m.seed = seed;

    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    std::vector<double> grad_w(m.weights.size());
    std::vector<double> grad_b(m.bias.size());
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t stop = std::min(n, start + batch_size);
            std::fill(grad_w.begin(), grad_w.end(), 0.0);
            std::fill(grad_b.begin(), grad_b.end(), 0.0);
            for (std::size_t s = start; s < stop; ++s) {
                const auto p = data.row(order[s]);
                auto prob = predict_proba(m, p);
                prob[data.label(order[s])] -= 1.0;
                for (int c = 0; c < classes; ++c) {
                    grad_b[c] += prob[c];
                    double* gw = grad_w.data() + static_cast<std::size_t>(c) * m.dim;
                    for (std::size_t j = 0; j < m.dim; ++j) gw[j] += prob[c] * p[j];
                }
            }
            const double scale = lr / static_cast<double>(stop - start);
            for (std::size_t j = 0; j < grad_w.size(); ++j) m.weights[j] -= scale * grad_w[j];
            for (std::size_t c = 0; c < grad_b.size(); ++c) m.bias[c] -= scale * grad_b[c];
        }
    }
    return m;
}

/// Gradient of the cross-entropy loss with respect to the input point,
/// W^T (softmax - onehot(label)).
inline std::vector<double> input_gradient(const AttackModel& model, Point a, int label) {
    require(label >= 0 && label < model.classes, "label out of range");
    auto prob = predict_proba(model, a);
    prob[label] -= 1.0;
    std::vector<double> g(model.dim, 0.0);
    for (int c = 0; c < model.classes; ++c) {
        const auto w = model.weight_row(c);
        for (std::size_t j = 0; j < model.dim; ++j) g[j] += prob[c] * w[j];
    }
    return g;
}

/// Sign of the input gradient, scaled to unit Euclidean length.
inline std::vector<double> attack_direction(const AttackModel& model, Point a, int label) {
    auto g = input_gradient(model, a, label);
    std::size_t nonzero = 0;
    for (double& v : g) {
        v = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
        nonzero += v != 0.0;
    }
    if (nonzero == 0) fail(Errc::degenerate, "zero loss gradient; no attack direction");
    const double inv = 1.0 / std::sqrt(static_cast<double>(nonzero));
    for (double& v : g) v *= inv;
    return g;
}

/// Uniformly random unit vector (fallback direction).
inline std::vector<double> random_unit_vector(std::size_t dim, Rng& rng) {
    require(dim >= 1, "dimension must be >= 1");
    std::vector<double> v(dim);
    double s = 0.0;
    while (s == 0.0) {
        s = 0.0;
        for (double& t : v) {
            t = rng.normal();
            s += t * t;
        }
    }
    const double inv = 1.0 / std::sqrt(s);
    for (double& t : v) t *= inv;
    return v;
}

} // namespace lidbounds
