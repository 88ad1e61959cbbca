#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <tuple>

#include "zsclust/cluster.hpp"
#include "zsclust/errors.hpp"

namespace zsclust {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Edge {
    std::size_t a;
    std::size_t b;
    double weight;
};

// Core distance: distance to the min_samples-th nearest point, the point itself included.
std::vector<double> core_distances(const PointSet& points, std::size_t min_samples) {
    const std::size_t n = points.size();
    std::vector<double> core(n), row(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) row[j] = i == j ? 0.0 : points.distance(i, j);
        const auto nth = row.begin() + static_cast<std::ptrdiff_t>(min_samples - 1);
        std::nth_element(row.begin(), nth, row.end());
        core[i] = *nth;
    }
    return core;
}

// Rank of every point in lexicographic coordinate order. Ties between equal
// weights break on these ranks, so the result does not depend on row order.
std::vector<std::size_t> content_ranks(const EmbeddingMatrix& x) {
    const std::size_t n = x.rows();
    std::vector<std::size_t> order(n), rank(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ra = x.row(a), rb = x.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });
    for (std::size_t i = 0; i < n; ++i) rank[order[i]] = i;
    return rank;
}

struct EdgeOrder {
    const std::vector<std::size_t>& rank;

    auto key(const Edge& e) const {
        return std::tuple(e.weight, std::min(rank[e.a], rank[e.b]), std::max(rank[e.a], rank[e.b]));
    }
    bool operator()(const Edge& x, const Edge& y) const { return key(x) < key(y); }
};

// Prim's algorithm on the dense mutual-reachability graph.
std::vector<Edge> mutual_reachability_mst(const PointSet& points, const std::vector<double>& core,
                                          const std::vector<std::size_t>& rank) {
    const std::size_t n = points.size();
    const EdgeOrder less{rank};
    std::vector<Edge> mst;
    mst.reserve(n - 1);
    std::vector<std::uint8_t> in_tree(n, 0);
    std::vector<Edge> best(n, Edge{0, 0, kInf});
    std::size_t current = 0;
    in_tree[0] = 1;
    for (std::size_t step = 1; step < n; ++step) {
        std::size_t next = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (in_tree[j]) continue;
            const Edge e{current, j, std::max({points.distance(current, j), core[current], core[j]})};
            if (best[j].weight == kInf || less(e, best[j])) best[j] = e;
            if (next == n || less(best[j], best[next])) next = j;
        }
        Edge e = best[next];
        if (rank[e.a] > rank[e.b]) std::swap(e.a, e.b);
        mst.push_back(e);
        in_tree[next] = 1;
        current = next;
    }
    std::sort(mst.begin(), mst.end(), less);
    return mst;
}

// Single-linkage hierarchy in linkage-matrix form: row i creates cluster n + i.
std::vector<Dendrogram::Merge> single_linkage(const std::vector<Edge>& mst, std::size_t n) {
    std::vector<std::size_t> parent(2 * n - 1);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    std::vector<std::size_t> size(2 * n - 1, 1);
    const auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    std::vector<Dendrogram::Merge> out;
    out.reserve(mst.size());
    for (std::size_t i = 0; i < mst.size(); ++i) {
        const std::size_t ra = find(mst[i].a);
        const std::size_t rb = find(mst[i].b);
        const std::size_t id = n + i;
        size[id] = size[ra] + size[rb];
        parent[ra] = id;
        parent[rb] = id;
        out.push_back({ra, rb, mst[i].weight, size[id]});
    }
    return out;
}

std::vector<CondensedTreeRow> condense(const std::vector<Dendrogram::Merge>& h, std::size_t n,
                                       std::size_t min_cluster_size) {
    const std::size_t root = 2 * n - 2;
    const auto node_size = [&](std::size_t node) { return node < n ? std::size_t{1} : h[node - n].size; };
    const auto leaves_under = [&](std::size_t node, std::vector<std::uint8_t>& ignore, auto&& emit) {
        std::vector<std::size_t> stack{node};
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            ignore[cur] = 1;
            if (cur < n) {
                emit(cur);
            } else {
                stack.push_back(h[cur - n].b);
                stack.push_back(h[cur - n].a);
            }
        }
    };

    std::vector<CondensedTreeRow> rows;
    std::vector<std::size_t> relabel(2 * n - 1, 0);
    std::vector<std::uint8_t> ignore(2 * n - 1, 0);
    std::size_t next_label = n + 1;
    relabel[root] = n;

    std::deque<std::size_t> queue{root};
    while (!queue.empty()) {
        const std::size_t node = queue.front();
        queue.pop_front();
        if (node < n) continue;
        const auto& m = h[node - n];
        queue.push_back(m.a);
        queue.push_back(m.b);
        if (ignore[node]) continue;

        const double lambda = m.height > 0.0 ? 1.0 / m.height : kInf;
        const std::size_t left_count = node_size(m.a);
        const std::size_t right_count = node_size(m.b);
        const std::size_t parent = relabel[node];
        const auto drop = [&](std::size_t side) {
            leaves_under(side, ignore, [&](std::size_t leaf) { rows.push_back({parent, leaf, lambda, 1}); });
        };
        if (left_count >= min_cluster_size && right_count >= min_cluster_size) {
            relabel[m.a] = next_label++;
            rows.push_back({parent, relabel[m.a], lambda, left_count});
            relabel[m.b] = next_label++;
            rows.push_back({parent, relabel[m.b], lambda, right_count});
        } else if (left_count < min_cluster_size && right_count < min_cluster_size) {
            drop(m.a);
            drop(m.b);
        } else if (left_count < min_cluster_size) {
            relabel[m.b] = parent;
            drop(m.a);
        } else {
            relabel[m.a] = parent;
            drop(m.b);
        }
    }
    return rows;
}

}  // namespace

HdbscanResult hdbscan(const EmbeddingMatrix& x, const HdbscanSpec& spec) {
    validate(ClustererSpec{spec});
    const std::size_t n = x.rows();
    const std::size_t min_samples = spec.min_samples.value_or(spec.min_cluster_size);
    if (n < spec.min_cluster_size) {
        throw DegenerateInputError("hdbscan: " + std::to_string(n) + " samples is fewer than min_cluster_size=" +
                                   std::to_string(spec.min_cluster_size));
    }
    if (min_samples > n) throw ConfigError("hdbscan: min_samples exceeds the number of samples");
    const auto max_size = static_cast<std::size_t>(std::ceil(spec.max_cluster_size_fraction * static_cast<double>(n) - 1e-9));

    HdbscanResult result;
    if (n == 1) {
        result.assignment = ClusterAssignment::from_labels(std::vector<std::int64_t>{kNoise});
        return result;
    }
    const PointSet points(x, spec.metric);
    const std::vector<double> core = core_distances(points, min_samples);
    const auto hierarchy = single_linkage(mutual_reachability_mst(points, core, content_ranks(x)), n);
    result.condensed_tree = condense(hierarchy, n, spec.min_cluster_size);
    const auto& tree = result.condensed_tree;

    // Stability of each condensed cluster.
    std::map<std::size_t, double> birth, stability;
    std::map<std::size_t, std::size_t> cluster_size;
    std::map<std::size_t, std::vector<std::size_t>> children;
    birth[n] = 0.0;
    stability[n] = 0.0;
    cluster_size[n] = n;
    for (const auto& row : tree) {
        if (row.child_size > 1) {
            birth[row.child] = row.lambda;
            stability[row.child] = 0.0;
            cluster_size[row.child] = row.child_size;
            children[row.parent].push_back(row.child);
        }
    }
    for (const auto& row : tree) {
        const double b = birth[row.parent];
        if (row.lambda == b) continue;
        stability[row.parent] += (row.lambda - b) * static_cast<double>(row.child_size);
    }

    // Excess of mass, leaves upwards; the root itself is never a candidate.
    std::map<std::size_t, bool> is_cluster;
    for (const auto& [id, _] : stability) {
        if (id != n) is_cluster[id] = true;
    }
    for (auto it = stability.rbegin(); it != stability.rend(); ++it) {
        const std::size_t node = it->first;
        if (node == n) continue;
        double subtree = 0.0;
        for (std::size_t c : children[node]) subtree += stability[c];
        if (subtree > it->second || cluster_size[node] > max_size) {
            is_cluster[node] = false;
            it->second = subtree;
        } else {
            std::vector<std::size_t> stack(children[node]);
            while (!stack.empty()) {
                const std::size_t c = stack.back();
                stack.pop_back();
                is_cluster[c] = false;
                for (std::size_t g : children[c]) stack.push_back(g);
            }
        }
    }
    for (const auto& [id, selected] : is_cluster) {
        if (selected) result.selected.push_back(id);
    }

    // Each point joins the selected cluster among its condensed ancestors.
    std::map<std::size_t, std::size_t> parent_of;
    std::vector<std::size_t> leaf_parent(n, n);
    for (const auto& row : tree) {
        if (row.child_size > 1) {
            parent_of[row.child] = row.parent;
        } else {
            leaf_parent[row.child] = row.parent;
        }
    }
    std::map<std::size_t, std::int64_t> label_of;
    for (std::size_t i = 0; i < result.selected.size(); ++i) {
        label_of[result.selected[i]] = static_cast<std::int64_t>(i);
    }
    std::vector<std::int64_t> labels(n, kNoise);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t node = leaf_parent[i];
        while (node != n) {
            if (const auto f = label_of.find(node); f != label_of.end()) {
                labels[i] = f->second;
                break;
            }
            node = parent_of[node];
        }
    }
    result.assignment = ClusterAssignment::from_labels(labels);
    return result;
}

}  // namespace zsclust
