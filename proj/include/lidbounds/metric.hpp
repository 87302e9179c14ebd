#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "lidbounds/dataset.hpp"
#include "lidbounds/error.hpp"

namespace lidbounds {

inline double squared_distance(Point p, Point q) {
    require(p.size() == q.size(), "dimension mismatch: " + std::to_string(p.size()) + " vs " + std::to_string(q.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double t = p[i] - q[i];
        s += t * t;
    }
    return s;
}

/// Euclidean distance.
inline double distance(Point p, Point q) { return std::sqrt(squared_distance(p, q)); }

/// The k nearest dataset members of a query, ascending by distance.
struct NeighborList {
    std::vector<double> distances;
    std::vector<std::size_t> indices;

    std::size_t k() const noexcept { return distances.size(); }
    double r_max() const { return distances.back(); }
};

/// Distances from `query` to every dataset row, index-aligned; with `exclude`
/// that row is dropped (later rows shift down by one).
inline std::vector<double> all_distances(const Dataset& data, Point query,
                                         std::optional<std::size_t> exclude = std::nullopt) {
    require(query.size() == data.dim(), "query dimension " + std::to_string(query.size()) +
                                            " does not match dataset dimension " + std::to_string(data.dim()));
    require(!exclude || *exclude < data.size(), "excluded index out of range");
    std::vector<double> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (exclude && *exclude == i) continue;
        out.push_back(distance(data.row(i), query));
    }
    return out;
}

/// Exact brute-force k-NN; ties resolve to the smaller dataset index.
inline NeighborList knn(const Dataset& data, Point query, std::size_t k,
                        std::optional<std::size_t> exclude = std::nullopt) {
    require(query.size() == data.dim(), "query dimension " + std::to_string(query.size()) +
                                            " does not match dataset dimension " + std::to_string(data.dim()));
    require(!exclude || *exclude < data.size(), "excluded index out of range");
    const std::size_t available = data.size() - (exclude ? 1 : 0);
    require(k >= 1 && k <= available,
            "k = " + std::to_string(k) + " outside [1, " + std::to_string(available) + "]");

    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(available);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (exclude && *exclude == i) continue;
        cand.emplace_back(squared_distance(data.row(i), query), i);
    }
    // pair ordering compares distance then index, which is the tie-break rule
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());

    NeighborList out;
    out.distances.reserve(k);
    out.indices.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.distances.push_back(std::sqrt(cand[i].first));
        out.indices.push_back(cand[i].second);
    }
    return out;
}

inline NeighborList knn(const Dataset& data, std::size_t member, std::size_t k) {
    require(member < data.size(), "query index out of range");
    return knn(data, data.row(member), k, member);
}

} // namespace lidbounds
