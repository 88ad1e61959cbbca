#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "test_support.hpp"
#include "zsclust/cluster.hpp"
#include "zsclust/errors.hpp"
#include "zsclust/metrics.hpp"

using namespace zsclust;
using namespace zsclust::testing;

namespace {

Labels labels_of(const ClusterAssignment& a) { return {a.labels().begin(), a.labels().end()}; }

// Exhaustive best 2-partition of 1-D points (both parts non-empty).
double best_two_means(const std::vector<double>& x) {
    double best = INFINITY;
    const std::size_t n = x.size();
    for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << n); ++mask) {
        double s[2] = {0, 0}, q[2] = {0, 0};
        int c[2] = {0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            const int g = (mask >> i) & 1;
            s[g] += x[i];
            q[g] += x[i] * x[i];
            ++c[g];
        }
        best = std::min(best, q[0] - s[0] * s[0] / c[0] + q[1] - s[1] * s[1] / c[1]);
    }
    return best;
}

EmbeddingMatrix ring_and_blob(std::uint64_t seed, Labels& y) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.1);
    std::uniform_real_distribution<double> angle(0.0, 2 * M_PI);
    std::vector<double> v;
    y.clear();
    for (int i = 0; i < 150; ++i) {
        const double a = angle(rng);
        v.push_back(5 * std::cos(a) + g(rng));
        v.push_back(5 * std::sin(a) + g(rng));
        y.push_back(0);
    }
    for (int i = 0; i < 50; ++i) {
        v.push_back(3 * g(rng));
        v.push_back(3 * g(rng));
        y.push_back(1);
    }
    return matrix_from(200, 2, v);
}

}  // namespace

// ---- k-means ---------------------------------------------------------------

TEST(KMeans, Examples) {
    const auto x = matrix_from(4, 1, {0, 1, 10, 11});
    const auto r = kmeans(x, KMeansSpec{2}, 1);
    EXPECT_TRUE(same_partition(r.assignment.labels(), Labels{0, 0, 1, 1}));
    EXPECT_NEAR(r.inertia, 1.0, 1e-12);

    EXPECT_NEAR(kmeans(x, KMeansSpec{4}, 1).inertia, 0.0, 1e-12);
    const auto one = kmeans(matrix_from(3, 2, {0, 0, 3, 6, 6, 3}), KMeansSpec{1}, 1);
    EXPECT_NEAR(one.centroids(0, 0), 3.0, 1e-12);
    EXPECT_NEAR(one.centroids(0, 1), 3.0, 1e-12);
    EXPECT_THROW(kmeans(x, KMeansSpec{5}, 1), ConfigError);
}

TEST(KMeans, InertiaNonIncreasing) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto b = gaussian_blobs(seed, 120, 4, 5, 2.0);
        const auto r = kmeans(b.x, KMeansSpec{5}, seed);
        for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
            ASSERT_LE(r.inertia_history[i], r.inertia_history[i - 1] * (1 + 1e-12)) << "seed " << seed;
        }
        EXPECT_NEAR(r.inertia, r.inertia_history.back(), 1e-9 * (1 + r.inertia));
    }
}

TEST(KMeans, TinyInstancesReachGlobalOptimum) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    int hits = 0;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        const std::size_t n = 3 + rng() % 6;
        std::vector<double> x(n);
        for (auto& v : x) v = u(rng);
        const auto r = kmeans(matrix_from(n, 1, x), KMeansSpec{2}, trial);
        hits += r.inertia <= best_two_means(x) + 1e-6;
    }
    EXPECT_GE(hits, 95);
}

TEST(KMeans, SeededAndCentroidOrder) {
    const auto b = gaussian_blobs(4, 200, 3, 4, 4.0);
    const auto r1 = kmeans(b.x, KMeansSpec{4}, 7);
    const auto r2 = kmeans(b.x, KMeansSpec{4}, 7);
    EXPECT_EQ(r1.assignment, r2.assignment);
    EXPECT_EQ(r1.centroids, r2.centroids);
    // Centroid row c is the mean of the points labelled c.
    for (std::size_t c = 0; c < 4; ++c) {
        double s = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < 200; ++i) {
            if (r1.assignment.labels()[i] == static_cast<std::int64_t>(c)) {
                s += b.x(i, 0);
                ++n;
            }
        }
        EXPECT_NEAR(r1.centroids(c, 0), s / n, 1e-5);
    }
}

// ---- spectral --------------------------------------------------------------

TEST(Spectral, DisconnectedBlobsRecovered) {
    const auto b = gaussian_blobs(5, 80, 3, 2, 50.0, 0.5);
    const auto r = spectral(b.x, SpectralSpec{2, 10}, 1);
    EXPECT_TRUE(same_partition(r.assignment.labels(), b.y));
}

TEST(Spectral, OneCluster) {
    const auto b = gaussian_blobs(6, 40, 3, 2, 3.0);
    const auto r = spectral(b.x, SpectralSpec{1, 10}, 1);
    EXPECT_EQ(r.assignment.n_clusters(), 1u);
}

TEST(Spectral, RingAroundBlob) {
    Labels y;
    const auto x = ring_and_blob(7, y);
    const auto r = spectral(x, SpectralSpec{2, 10}, 1);
    EXPECT_GE(ami(y, labels_of(r.assignment)), 0.95);
    // K-Means cannot separate concentric structure.
    EXPECT_LT(ami(y, labels_of(kmeans(x, KMeansSpec{2}, 1).assignment)), 0.5);
}

TEST(Spectral, EigenvaluesNonNegative) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto b = gaussian_blobs(seed, 60 + seed * 50, 5, 4, 2.0);
        const auto r = spectral(b.x, SpectralSpec{4, 10}, seed);
        EXPECT_GE(r.laplacian_eigenvalues.minCoeff(), -1e-8);
        for (Eigen::Index i = 1; i < r.laplacian_eigenvalues.size(); ++i) {
            EXPECT_LE(r.laplacian_eigenvalues(i - 1), r.laplacian_eigenvalues(i) + 1e-10);
        }
    }
}

TEST(Spectral, ClusterQrOnIndicatorVectors) {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(6, 2);
    v(0, 0) = v(1, 0) = v(2, 0) = 1 / std::sqrt(3.0);
    v(3, 1) = v(4, 1) = v(5, 1) = 1 / std::sqrt(3.0);
    const auto l = cluster_qr(v);
    EXPECT_TRUE(same_partition(l, Labels{0, 0, 0, 1, 1, 1}));
}

TEST(Spectral, ConfigErrors) {
    const auto b = gaussian_blobs(8, 20, 2, 2, 3.0);
    EXPECT_THROW(spectral(b.x, SpectralSpec{21, 5}, 1), ConfigError);
    EXPECT_THROW(spectral(b.x, SpectralSpec{2, 20}, 1), ConfigError);
}

// ---- agglomerative -----------------------------------------------------------

TEST(Agglomerative, Examples) {
    const auto x = matrix_from(3, 1, {0, 1, 10});
    const auto avg = agglomerative(x, {Metric::L2, Linkage::Average, NClusters{2}});
    EXPECT_TRUE(same_partition(avg.assignment.labels(), Labels{0, 0, 1}));
    const auto single = agglomerative(x, {Metric::L2, Linkage::Single, DistanceThreshold{2.0}});
    EXPECT_EQ(single.assignment.n_clusters(), 2u);
    EXPECT_TRUE(same_partition(single.assignment.labels(), Labels{0, 0, 1}));
    EXPECT_EQ(agglomerative(x, {Metric::L2, Linkage::Ward, NClusters{3}}).assignment.n_clusters(), 3u);
    EXPECT_EQ(agglomerative(x, {Metric::L2, Linkage::Ward, NClusters{1}}).assignment.n_clusters(), 1u);
}

TEST(Agglomerative, HandDendrogram) {
    const auto tree = linkage_tree(matrix_from(3, 1, {0, 1, 10}), Metric::L2, Linkage::Single);
    ASSERT_EQ(tree.merges.size(), 2u);
    EXPECT_DOUBLE_EQ(tree.merges[0].height, 1.0);
    EXPECT_DOUBLE_EQ(tree.merges[1].height, 9.0);
    EXPECT_EQ(tree.merges[1].size, 3u);
    const auto complete = linkage_tree(matrix_from(3, 1, {0, 1, 10}), Metric::L2, Linkage::Complete);
    EXPECT_DOUBLE_EQ(complete.merges[1].height, 10.0);
    const auto average = linkage_tree(matrix_from(3, 1, {0, 1, 10}), Metric::L2, Linkage::Average);
    EXPECT_DOUBLE_EQ(average.merges[1].height, 9.5);
    // Ward height between {0,1} and {10}: sqrt(2 * 2 * 1 / 3) * |0.5 - 10|.
    const auto ward = linkage_tree(matrix_from(3, 1, {0, 1, 10}), Metric::L2, Linkage::Ward);
    EXPECT_NEAR(ward.merges[1].height, std::sqrt(4.0 / 3.0) * 9.5, 1e-12);
}

TEST(Agglomerative, HeightsNonDecreasingAndCutsAgree) {
    std::mt19937_64 rng(9);
    const Metric metrics[] = {Metric::L1, Metric::L2, Metric::LInf, Metric::Cosine};
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 4 + rng() % 40;
        const auto x = random_matrix(rng, n, 1 + rng() % 5);
        for (auto linkage : {Linkage::Ward, Linkage::Complete, Linkage::Average, Linkage::Single}) {
            const Metric metric = linkage == Linkage::Ward ? Metric::L2 : metrics[rng() % 4];
            const auto tree = linkage_tree(x, metric, linkage);
            ASSERT_EQ(tree.merges.size(), n - 1);
            for (std::size_t i = 1; i < tree.merges.size(); ++i) {
                ASSERT_GE(tree.merges[i].height, tree.merges[i - 1].height);
            }
            const std::size_t k = 1 + rng() % n;
            const auto direct = agglomerative(x, {metric, linkage, NClusters{k}});
            EXPECT_EQ(direct.assignment.n_clusters(), k);
            EXPECT_TRUE(same_partition(direct.assignment.labels(), cut_n_clusters(tree, k).labels()));
            // A threshold strictly between the two bracketing heights gives the same partition.
            const double lo = k < n ? tree.merges[n - k - 1].height : 0.0;
            const double hi = k > 1 ? tree.merges[n - k].height : lo + 1.0;
            if (hi > lo) {
                const auto cut = cut_threshold(tree, 0.5 * (lo + hi));
                EXPECT_TRUE(same_partition(cut.labels(), direct.assignment.labels()));
            }
        }
    }
}

TEST(Agglomerative, Errors) {
    const auto x = matrix_from(3, 2, {0, 0, 1, 1, 2, 0});
    EXPECT_THROW(agglomerative(x, {Metric::Cosine, Linkage::Average, NClusters{2}}), DegenerateInputError);
    EXPECT_THROW(validate(ClustererSpec{AgglomerativeSpec{Metric::L1, Linkage::Ward, NClusters{2}}}), ConfigError);
    EXPECT_THROW(validate(ClustererSpec{AgglomerativeSpec{Metric::L2, Linkage::Single, DistanceThreshold{0.0}}}),
                 ConfigError);
}

// ---- affinity propagation ----------------------------------------------------

TEST(AffinityPropagation, IdenticalPointsOneCluster) {
    const auto r = affinity_propagation(matrix_from(5, 2, std::vector<double>(10, 3.0)), {}, 1);
    EXPECT_EQ(r.assignment.n_clusters(), 1u);
    EXPECT_EQ(r.exemplars.size(), 1u);
}

TEST(AffinityPropagation, TwoBlobsTwoExemplars) {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> g(0.0, 0.3);
    std::vector<double> v;
    Labels y;
    for (int i = 0; i < 40; ++i) {
        const double c = i < 20 ? 0.0 : 20.0;
        v.push_back(c + g(rng));
        v.push_back(g(rng));
        y.push_back(i < 20 ? 0 : 1);
    }
    AffinityPropagationSpec s;
    s.damping = 0.9;
    s.preference = -100.0;  // below the within-blob spread, above the gap
    const auto r = affinity_propagation(matrix_from(40, 2, v), s, 1);
    ASSERT_EQ(r.exemplars.size(), 2u);
    EXPECT_NE(y[r.exemplars[0]], y[r.exemplars[1]]);
    EXPECT_TRUE(same_partition(r.assignment.labels(), y));
    EXPECT_TRUE(r.converged);
}

TEST(AffinityPropagation, DampingRange) {
    AffinityPropagationSpec s;
    s.damping = 0.2;
    EXPECT_THROW(validate(ClustererSpec{s}), ConfigError);
    EXPECT_THROW(affinity_propagation(matrix_from(2, 1, {0, 1}), s, 1), ConfigError);
    s.damping = 1.0;
    EXPECT_THROW(validate(ClustererSpec{s}), ConfigError);
}

TEST(AffinityPropagation, NonConvergenceIsFlagged) {
    const auto b = gaussian_blobs(11, 60, 3, 4, 1.0);
    AffinityPropagationSpec s;
    s.damping = 0.5;
    s.max_iter = 3;
    const auto r = affinity_propagation(b.x, s, 1);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.assignment.size(), 60u);
}

// ---- HDBSCAN -----------------------------------------------------------------

TEST(Hdbscan, TwoBlobsAndOutlier) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0.0, 0.2);
    std::vector<double> v;
    for (int i = 0; i < 20; ++i) {
        v.push_back((i < 10 ? 0.0 : 10.0) + g(rng));
        v.push_back(g(rng));
    }
    v.push_back(50.0);
    v.push_back(50.0);
    HdbscanSpec s;
    s.min_cluster_size = 5;
    s.max_cluster_size_fraction = 1.0;  // two halves of 21 points exceed the 20% cap
    const auto r = hdbscan(matrix_from(21, 2, v), s);
    EXPECT_EQ(r.assignment.n_clusters(), 2u);
    EXPECT_EQ(r.assignment.labels()[20], kNoise);
    Labels first(r.assignment.labels().begin(), r.assignment.labels().begin() + 20);
    Labels expect(20);
    for (int i = 0; i < 20; ++i) expect[i] = i < 10 ? 0 : 1;
    EXPECT_TRUE(same_partition(first, expect));
    EXPECT_NEAR(r.assignment.clustered_fraction(), 20.0 / 21.0, 1e-12);
}

TEST(Hdbscan, UniformNoiseWithLargeMinSize) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(200);
    for (auto& x : v) x = u(rng);
    HdbscanSpec s;
    s.min_cluster_size = 51;
    const auto r = hdbscan(matrix_from(100, 2, v), s);
    EXPECT_EQ(r.assignment.n_noise(), 100u);
    EXPECT_EQ(r.assignment.clustered_fraction(), 0.0);
}

TEST(Hdbscan, ClusterSizesWithinBounds) {
    std::mt19937_64 rng(14);
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 40 + rng() % 200;
        const auto b = gaussian_blobs(rng(), n, 2 + rng() % 3, 2 + rng() % 8, 1.0 + (rng() % 5));
        HdbscanSpec s;
        s.min_cluster_size = 2 + rng() % 10;
        const auto r = hdbscan(b.x, s);
        std::map<std::int64_t, std::size_t> sizes;
        for (auto l : r.assignment.labels()) {
            if (l != kNoise) ++sizes[l];
        }
        const auto cap = static_cast<std::size_t>(std::ceil(0.2 * n));
        for (auto& [_, sz] : sizes) {
            EXPECT_GE(sz, s.min_cluster_size);
            EXPECT_LE(sz, cap);
        }
    }
}

TEST(Hdbscan, TooFewSamples) {
    HdbscanSpec s;
    s.min_cluster_size = 10;
    EXPECT_THROW(hdbscan(matrix_from(4, 1, {0, 1, 2, 3}), s), DegenerateInputError);
}

// ---- shared properties --------------------------------------------------------

TEST(Clusterers, RowPermutationInvariance) {
    std::mt19937_64 rng(15);
    for (int t = 0; t < 10; ++t) {
        const std::size_t n = 60;
        const auto b = gaussian_blobs(rng(), n, 3, 4, 4.0);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        const auto xp = b.x.select_rows(perm);
        const std::vector<ClustererSpec> specs{
            AgglomerativeSpec{Metric::L2, Linkage::Ward, NClusters{4}},
            AgglomerativeSpec{Metric::L1, Linkage::Average, NClusters{4}},
            AgglomerativeSpec{Metric::Cosine, Linkage::Complete, DistanceThreshold{0.5}},
            HdbscanSpec{},
        };
        for (const auto& spec : specs) {
            const auto a = run_clusterer(b.x, spec, 1).assignment;
            const auto p = run_clusterer(xp, spec, 1).assignment;
            Labels back(n);
            for (std::size_t i = 0; i < n; ++i) back[perm[i]] = p.labels()[i];
            EXPECT_TRUE(same_partition(back, labels_of(a))) << clusterer_kind(spec);
        }
    }
}

TEST(ClustererSpec, JsonRoundTrip) {
    const std::vector<ClustererSpec> specs{
        KMeansSpec{5, 3, 1e-3, 50},
        SpectralSpec{std::nullopt, 15},
        AgglomerativeSpec{Metric::LInf, Linkage::Single, DistanceThreshold{0.25}},
        AgglomerativeSpec{Metric::L2, Linkage::Ward, NClusters{}},
        AffinityPropagationSpec{0.75, 500, 10, -3.5},
        HdbscanSpec{8, 3, 0.5, Metric::L1},
    };
    for (const auto& s : specs) {
        const auto j = to_json(s);
        EXPECT_EQ(to_json(clusterer_from_json(j)), j);
    }
    EXPECT_THROW(clusterer_from_json(nlohmann::ordered_json{{"kind", "dbscan"}}), ConfigError);
    EXPECT_THROW(clusterer_from_json(nlohmann::ordered_json{{"kind", "kmeans"}, {"kk", 3}}), ConfigError);
    const auto parsed = clusterer_from_json(nlohmann::ordered_json::parse(
        R"({"kind":"agglomerative","metric":"L2","linkage":"ward","stop":{"distance_threshold":2.0}})"));
    const auto& ac = std::get<AgglomerativeSpec>(parsed);
    EXPECT_DOUBLE_EQ(std::get<DistanceThreshold>(ac.stop).t, 2.0);
}

TEST(ClustererSpec, ClusterCountResolution) {
    EXPECT_TRUE(needs_cluster_count(KMeansSpec{}));
    EXPECT_FALSE(needs_cluster_count(HdbscanSpec{}));
    EXPECT_FALSE(needs_cluster_count(AgglomerativeSpec{Metric::L2, Linkage::Single, DistanceThreshold{1.0}}));
    const auto k = with_cluster_count(SpectralSpec{}, 7);
    EXPECT_EQ(*std::get<SpectralSpec>(k).k, 7u);
    EXPECT_THROW(run_clusterer(matrix_from(3, 1, {0, 1, 2}), KMeansSpec{}, 1), ConfigError);
}
