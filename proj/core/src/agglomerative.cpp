#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "zsclust/cluster.hpp"
#include "zsclust/errors.hpp"

namespace zsclust {
namespace {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void attach(std::size_t child_root, std::size_t new_root) { parent_[child_root] = new_root; }

private:
    std::vector<std::size_t> parent_;
};

// Full symmetric matrix in a flat buffer; updated in place by the merges.
class DistanceMatrix {
public:
    DistanceMatrix(const PointSet& points, bool squared) : n_(points.size()), d_(n_ * n_, 0.0) {
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i + 1; j < n_; ++j) {
                double v = points.distance(i, j);
                if (squared) v *= v;
                d_[i * n_ + j] = v;
                d_[j * n_ + i] = v;
            }
        }
    }
    double get(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
    void set(std::size_t i, std::size_t j, double v) {
        d_[i * n_ + j] = v;
        d_[j * n_ + i] = v;
    }

private:
    std::size_t n_;
    std::vector<double> d_;
};

// Lance-Williams update for the distance between cluster i and the union of x and y.
double merged_distance(Linkage linkage, double d_xi, double d_yi, double d_xy, double nx, double ny, double ni) {
    switch (linkage) {
        case Linkage::Single: return std::min(d_xi, d_yi);
        case Linkage::Complete: return std::max(d_xi, d_yi);
        case Linkage::Average: return (nx * d_xi + ny * d_yi) / (nx + ny);
        case Linkage::Ward: {
            const double t = 1.0 / (nx + ny + ni);
            const double v = (ni + nx) * t * d_xi * d_xi + (ni + ny) * t * d_yi * d_yi - ni * t * d_xy * d_xy;
            return std::sqrt(std::max(v, 0.0));
        }
    }
    return 0.0;
}

ClusterAssignment apply_merges(const Dendrogram& tree, std::size_t count) {
    const std::size_t n = tree.n_samples;
    UnionFind uf(2 * n);
    for (std::size_t m = 0; m < count; ++m) {
        const auto& merge = tree.merges[m];
        uf.attach(uf.find(merge.a), n + m);
        uf.attach(uf.find(merge.b), n + m);
    }
    std::vector<std::int64_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::int64_t>(uf.find(i));
    return ClusterAssignment::from_labels(labels);
}

}  // namespace

Dendrogram linkage_tree(const EmbeddingMatrix& x, Metric metric, Linkage linkage) {
    if (linkage == Linkage::Ward && metric != Metric::L2) throw ConfigError("ward linkage requires the L2 metric");
    const std::size_t n = x.rows();
    const PointSet points(x, metric);
    DistanceMatrix dist(points, false);

    // Nearest-neighbour chain; valid because all four linkages are reducible.
    struct Raw {
        std::size_t x, y;
        double height;
        std::size_t size;
    };
    std::vector<Raw> raw;
    raw.reserve(n > 0 ? n - 1 : 0);
    std::vector<std::size_t> size(n, 1);
    std::vector<std::size_t> chain;
    chain.reserve(n);
    for (std::size_t step = 0; step + 1 < n; ++step) {
        if (chain.empty()) {
            std::size_t first = 0;
            while (size[first] == 0) ++first;
            chain.push_back(first);
        }
        std::size_t cx = 0, cy = 0;
        double current = 0.0;
        for (;;) {
            cx = chain.back();
            current = std::numeric_limits<double>::infinity();
            if (chain.size() > 1) {
                cy = chain[chain.size() - 2];
                current = dist.get(cx, cy);
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (size[i] == 0 || i == cx) continue;
                const double v = dist.get(cx, i);
                if (v < current) {
                    current = v;
                    cy = i;
                }
            }
            if (chain.size() > 1 && cy == chain[chain.size() - 2]) break;
            chain.push_back(cy);
        }
        chain.pop_back();
        chain.pop_back();
        if (cx > cy) std::swap(cx, cy);
        const auto nx = static_cast<double>(size[cx]);
        const auto ny = static_cast<double>(size[cy]);
        raw.push_back({cx, cy, current, size[cx] + size[cy]});
        size[cx] = 0;
        size[cy] += static_cast<std::size_t>(nx);
        for (std::size_t i = 0; i < n; ++i) {
            if (size[i] == 0 || i == cy) continue;
            dist.set(i, cy,
                     merged_distance(linkage, dist.get(i, cx), dist.get(i, cy), current, nx, ny,
                                     static_cast<double>(size[i])));
        }
    }

    std::stable_sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) { return a.height < b.height; });

    // Relabel sample-slot ids into linkage-matrix cluster ids.
    Dendrogram tree;
    tree.n_samples = n;
    tree.merges.reserve(raw.size());
    UnionFind uf(2 * n);
    std::vector<std::size_t> cluster_size(2 * n, 1);
    for (std::size_t m = 0; m < raw.size(); ++m) {
        std::size_t a = uf.find(raw[m].x);
        std::size_t b = uf.find(raw[m].y);
        if (a > b) std::swap(a, b);
        cluster_size[n + m] = cluster_size[a] + cluster_size[b];
        tree.merges.push_back({a, b, raw[m].height, cluster_size[n + m]});
        uf.attach(a, n + m);
        uf.attach(b, n + m);
    }
    return tree;
}

ClusterAssignment cut_n_clusters(const Dendrogram& tree, std::size_t k) {
    if (k < 1 || k > tree.n_samples) {
        throw ConfigError("cannot cut " + std::to_string(tree.n_samples) + " samples into " + std::to_string(k) +
                          " clusters");
    }
    return apply_merges(tree, tree.n_samples - k);
}

ClusterAssignment cut_threshold(const Dendrogram& tree, double t) {
    std::size_t count = 0;
    while (count < tree.merges.size() && tree.merges[count].height < t) ++count;
    return apply_merges(tree, count);
}

AgglomerativeResult agglomerative(const EmbeddingMatrix& x, const AgglomerativeSpec& spec) {
    validate(ClustererSpec{spec});
    AgglomerativeResult result;
    result.dendrogram = linkage_tree(x, spec.metric, spec.linkage);
    if (const auto* stop = std::get_if<NClusters>(&spec.stop)) {
        if (!stop->k) throw ConfigError("agglomerative cluster count is unresolved");
        result.assignment = cut_n_clusters(result.dendrogram, *stop->k);
    } else {
        result.assignment = cut_threshold(result.dendrogram, std::get<DistanceThreshold>(spec.stop).t);
    }
    return result;
}

}  // namespace zsclust
