#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lidbounds/error.hpp"
#include "lidbounds/random.hpp"

namespace lidbounds {

using Point = std::span<const double>;

/// Immutable n x d matrix of finite features (row-major), with optional
/// integer class labels in [0, C).
class Dataset {
public:
    Dataset(std::vector<double> values, std::size_t n, std::size_t d,
            std::optional<std::vector<int>> labels = std::nullopt, std::string name = {})
        : values_(std::move(values)), n_(n), d_(d), labels_(std::move(labels)), name_(std::move(name)) {
        require(n_ >= 1 && d_ >= 1, "dataset needs n >= 1 and d >= 1");
        require(values_.size() == n_ * d_, "dataset value count does not equal n*d");
        for (double v : values_) require(std::isfinite(v), "dataset contains a non-finite feature");
        if (labels_) {
            require(labels_->size() == n_, "label count does not equal n");
            for (int l : *labels_) require(l >= 0, "labels must be nonnegative class ids");
        }
    }

    std::size_t size() const noexcept { return n_; }
    std::size_t dim() const noexcept { return d_; }
    const std::string& name() const noexcept { return name_; }

    Point row(std::size_t i) const { return Point(values_).subspan(i * d_, d_); }
    std::span<const double> values() const noexcept { return values_; }

    bool has_labels() const noexcept { return labels_.has_value(); }
    std::span<const int> labels() const {
        require(has_labels(), "dataset '" + name_ + "' has no labels");
        return *labels_;
    }
    int label(std::size_t i) const { return labels()[i]; }

    /// Number of classes, max(label) + 1; 0 when unlabeled.
    int num_classes() const {
        if (!labels_) return 0;
        return *std::max_element(labels_->begin(), labels_->end()) + 1;
    }

    /// Rows `indices` in the given order, labels carried along.
    Dataset select(std::span<const std::size_t> indices, std::string name) const {
        require(!indices.empty(), "cannot select an empty row set");
        std::vector<double> out;
        out.reserve(indices.size() * d_);
        std::optional<std::vector<int>> out_labels;
        if (labels_) out_labels.emplace().reserve(indices.size());
        for (std::size_t i : indices) {
            require(i < n_, "row index out of range");
            const auto r = row(i);
            out.insert(out.end(), r.begin(), r.end());
            if (labels_) out_labels->push_back((*labels_)[i]);
        }
        return Dataset(std::move(out), indices.size(), d_, std::move(out_labels), std::move(name));
    }

private:
    std::vector<double> values_;
    std::size_t n_;
    std::size_t d_;
    std::optional<std::vector<int>> labels_;
    std::string name_;
};

/// Indices of a uniform sample without replacement, returned in ascending
/// order so the subsample keeps the source ordering.
inline std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t n_keep, std::uint64_t seed) {
    require(n_keep >= 1, "subsample size must be at least 1");
    require(n_keep <= n, "subsample size " + std::to_string(n_keep) + " exceeds dataset size " +
                             std::to_string(n));
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(seed);
    // partial Fisher-Yates: the first n_keep slots are the sample
    for (std::size_t i = 0; i < n_keep; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.index(n - i));
        std::swap(perm[i], perm[j]);
    }
    perm.resize(n_keep);
    std::sort(perm.begin(), perm.end());
    return perm;
}

inline Dataset subsample(const Dataset& data, std::size_t n_keep, std::uint64_t seed) {
    const auto idx = subsample_indices(data.size(), n_keep, seed);
    return data.select(idx, data.name());
}

} // namespace lidbounds
