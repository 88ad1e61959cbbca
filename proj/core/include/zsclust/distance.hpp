#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zsclust/embedspace.hpp"

namespace zsclust {

enum class Metric { L1, L2, LInf, Cosine };

/// Names as they appear in configs and reports: "L1", "L2", "Linf", "cosine".
std::string_view to_string(Metric m) noexcept;
/// Accepts the canonical names plus the common aliases ("euclidean", "manhattan",
/// "chebyshev", "l2", ...). Throws ConfigError otherwise.
Metric parse_metric(std::string_view name);

/// Row-major double copy of an embedding matrix, with optional unit-normalized
/// rows so cosine distance reduces to 1 - dot.
class PointSet {
public:
    PointSet() = default;
    /// Throws DegenerateInputError when `metric` is cosine and a row has zero norm.
    PointSet(const EmbeddingMatrix& x, Metric metric);

    std::size_t size() const noexcept { return n_; }
    std::size_t dims() const noexcept { return d_; }
    Metric metric() const noexcept { return metric_; }
    const double* row(std::size_t i) const noexcept { return values_.data() + i * d_; }

    double distance(std::size_t i, std::size_t j) const noexcept {
        return distance(row(i), row(j));
    }
    double distance(const double* a, const double* b) const noexcept;

private:
    std::size_t n_ = 0;
    std::size_t d_ = 0;
    Metric metric_ = Metric::L2;
    std::vector<double> values_;
};

/// Packed upper triangle of the pairwise distance matrix (i < j), in
/// row-major order. Memory is N(N-1)/2 doubles.
class CondensedDistances {
public:
    explicit CondensedDistances(const PointSet& points);

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const noexcept {
        if (i == j) return 0.0;
        if (i > j) std::swap(i, j);
        return d_[index(i, j)];
    }

private:
    std::size_t index(std::size_t i, std::size_t j) const noexcept {
        return i * n_ - i * (i + 1) / 2 + (j - i - 1);
    }

    std::size_t n_;
    std::vector<double> d_;
};

/// Indices of the k nearest other rows of every row (self excluded), sorted by
/// increasing distance with ties broken by index, plus those distances.
struct KnnGraph {
    std::size_t k = 0;
    std::vector<std::size_t> indices;  // n * k
    std::vector<double> distances;     // n * k
};

KnnGraph exact_knn(const PointSet& points, std::size_t k);

}  // namespace zsclust
