#include "zsclust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "zsclust/errors.hpp"

namespace zsclust {

std::string_view to_string(NoisePolicy p) noexcept {
    return p == NoisePolicy::NoiseAsCluster ? "noise_as_cluster" : "exclude_noise";
}

NoisePolicy parse_noise_policy(std::string_view name) {
    if (name == "noise_as_cluster" || name == "NoiseAsCluster" || name == "cluster") {
        return NoisePolicy::NoiseAsCluster;
    }
    if (name == "exclude_noise" || name == "ExcludeNoise" || name == "exclude") {
        return NoisePolicy::ExcludeNoise;
    }
    throw ConfigError("unknown noise policy '" + std::string(name) + "'");
}

ContingencyTable ContingencyTable::from_counts(std::size_t rows, std::size_t cols,
                                               std::vector<std::int64_t> counts) {
    if (counts.size() != rows * cols) throw ValidationError("contingency counts have the wrong size");
    ContingencyTable t;
    t.rows = rows;
    t.cols = cols;
    t.counts = std::move(counts);
    t.row_margins.assign(rows, 0);
    t.col_margins.assign(cols, 0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const auto c = t.counts[i * cols + j];
            if (c < 0) throw ValidationError("negative contingency count");
            t.row_margins[i] += c;
            t.col_margins[j] += c;
            t.total += c;
        }
    }
    return t;
}

namespace {

// Dense ids in ascending order of the original values; noise stays -1.
std::vector<std::int64_t> dense_by_value(std::span<const std::int64_t> ids) {
    std::vector<std::int64_t> values;
    for (auto v : ids) {
        if (v != kNoise) values.push_back(v);
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<std::int64_t> out(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out[i] = ids[i] == kNoise ? kNoise
                                  : std::lower_bound(values.begin(), values.end(), ids[i]) - values.begin();
    }
    return out;
}

}  // namespace

ContingencyTable contingency(std::span<const std::int64_t> truth, std::span<const std::int64_t> pred,
                             NoisePolicy policy) {
    if (truth.size() != pred.size()) {
        throw ValidationError("label sequences differ in length (" + std::to_string(truth.size()) +
                              " vs " + std::to_string(pred.size()) + ")");
    }
    for (auto v : truth) {
        if (v < 0) throw ValidationError("ground-truth labels must be non-negative");
    }
    const auto u = dense_by_value(truth);
    const auto v = dense_by_value(pred);

    std::int64_t n_rows = 0, n_cols = 0;
    bool has_noise = false;
    for (std::size_t s = 0; s < u.size(); ++s) {
        if (v[s] == kNoise) {
            has_noise = true;
            if (policy == NoisePolicy::ExcludeNoise) continue;
        } else {
            n_cols = std::max(n_cols, v[s] + 1);
        }
        n_rows = std::max(n_rows, u[s] + 1);
    }
    const std::int64_t noise_col = n_cols;
    if (has_noise && policy == NoisePolicy::NoiseAsCluster) ++n_cols;
    if (n_rows == 0 || n_cols == 0) {
        throw DegenerateInputError("no samples left to compare after noise handling");
    }

    std::vector<std::int64_t> counts(static_cast<std::size_t>(n_rows * n_cols), 0);
    for (std::size_t s = 0; s < u.size(); ++s) {
        std::int64_t col = v[s];
        if (col == kNoise) {
            if (policy == NoisePolicy::ExcludeNoise) continue;
            col = noise_col;
        }
        ++counts[static_cast<std::size_t>(u[s] * n_cols + col)];
    }
    auto t = ContingencyTable::from_counts(static_cast<std::size_t>(n_rows),
                                           static_cast<std::size_t>(n_cols), std::move(counts));
    // Truth rows may be empty after exclusion; drop them so entropies stay exact.
    if (policy == NoisePolicy::ExcludeNoise && has_noise) {
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < t.rows; ++i) {
            if (t.row_margins[i] > 0) keep.push_back(i);
        }
        if (keep.size() != t.rows) {
            std::vector<std::int64_t> packed;
            packed.reserve(keep.size() * t.cols);
            for (auto i : keep) {
                for (std::size_t j = 0; j < t.cols; ++j) packed.push_back(t(i, j));
            }
            t = ContingencyTable::from_counts(keep.size(), t.cols, std::move(packed));
        }
    }
    return t;
}

// Entropy and MI share one log expression, log(N * n / (a * b)) with exact
// integer products, so MI(u, u) and H(u) agree to the last bit.
double entropy(std::span<const std::int64_t> margins) {
    std::int64_t n = 0;
    for (auto m : margins) n += m;
    if (n <= 0) return 0.0;
    const double total = static_cast<double>(n);
    double h = 0.0;
    for (auto m : margins) {
        if (m <= 0) continue;
        const double mm = static_cast<double>(m);
        h += (mm / total) * std::log((mm * total) / (mm * mm));
    }
    return h;
}

double mutual_information(const ContingencyTable& t) {
    if (t.total <= 0) return 0.0;
    const double total = static_cast<double>(t.total);
    double mi = 0.0;
    for (std::size_t i = 0; i < t.rows; ++i) {
        const double a = static_cast<double>(t.row_margins[i]);
        for (std::size_t j = 0; j < t.cols; ++j) {
            const auto c = t(i, j);
            if (c == 0) continue;
            const double nij = static_cast<double>(c);
            const double b = static_cast<double>(t.col_margins[j]);
            mi += (nij / total) * std::log((nij * total) / (a * b));
        }
    }
    return std::max(mi, 0.0);
}

double expected_mutual_information(std::span<const std::int64_t> row_margins,
                                   std::span<const std::int64_t> col_margins, std::int64_t n) {
    if (n <= 0) return 0.0;
    // Single-cell tables carry no information whatever the permutation.
    std::size_t nonzero_rows = 0, nonzero_cols = 0;
    for (auto a : row_margins) nonzero_rows += a > 0;
    for (auto b : col_margins) nonzero_cols += b > 0;
    if (nonzero_rows <= 1 || nonzero_cols <= 1) return 0.0;

    std::vector<double> log_fact(static_cast<std::size_t>(n) + 1);
    for (std::size_t k = 0; k < log_fact.size(); ++k) log_fact[k] = std::lgamma(static_cast<double>(k) + 1.0);
    const double total = static_cast<double>(n);
    const double log_total = std::log(total);

    double emi = 0.0;
    for (auto a : row_margins) {
        if (a <= 0) continue;
        for (auto b : col_margins) {
            if (b <= 0) continue;
            const std::int64_t lo = std::max<std::int64_t>(1, a + b - n);
            const std::int64_t hi = std::min(a, b);
            const double log_ab = std::log(static_cast<double>(a)) + std::log(static_cast<double>(b));
            // log of the count-independent part of the hypergeometric pmf
            const double log_base = log_fact[a] + log_fact[b] + log_fact[n - a] + log_fact[n - b] - log_fact[n];
            for (std::int64_t k = lo; k <= hi; ++k) {
                const double log_p = log_base - log_fact[k] - log_fact[a - k] - log_fact[b - k] -
                                     log_fact[n - a - b + k];
                const double kk = static_cast<double>(k);
                const double term = (kk / total) * (log_total + std::log(kk) - log_ab);
                emi += term * std::exp(log_p);
            }
        }
    }
    return emi;
}

double adjusted_mutual_info(const ContingencyTable& t) {
    const double mi = mutual_information(t);
    const double emi = expected_mutual_information(t.row_margins, t.col_margins, t.total);
    const double mean_h = 0.5 * (entropy(t.row_margins) + entropy(t.col_margins));
    const double denom = mean_h - emi;
    const double numer = mi - emi;
    constexpr double kTiny = 1e-15;
    if (std::abs(denom) < kTiny) return std::abs(numer) < kTiny ? 1.0 : 0.0;
    return numer / denom;
}

double normalized_mutual_info(const ContingencyTable& t) {
    const double mi = mutual_information(t);
    const double mean_h = 0.5 * (entropy(t.row_margins) + entropy(t.col_margins));
    if (mean_h <= 0.0) return 1.0;  // both partitions are a single cluster
    return std::clamp(mi / mean_h, 0.0, 1.0);
}

namespace {
double pairs(std::int64_t m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1); }
}  // namespace

double adjusted_rand_index(const ContingencyTable& t) {
    double index = 0.0;
    for (auto c : t.counts) index += pairs(c);
    double sum_a = 0.0, sum_b = 0.0;
    for (auto a : t.row_margins) sum_a += pairs(a);
    for (auto b : t.col_margins) sum_b += pairs(b);
    const double all_pairs = pairs(t.total);
    const double expected = all_pairs > 0.0 ? sum_a * sum_b / all_pairs : 0.0;
    const double max_index = 0.5 * (sum_a + sum_b);
    const double denom = max_index - expected;
    if (denom == 0.0) return 1.0;
    return (index - expected) / denom;
}

double ami(std::span<const std::int64_t> truth, std::span<const std::int64_t> pred, NoisePolicy policy) {
    return adjusted_mutual_info(contingency(truth, pred, policy));
}

double nmi(std::span<const std::int64_t> truth, std::span<const std::int64_t> pred, NoisePolicy policy) {
    return normalized_mutual_info(contingency(truth, pred, policy));
}

double ari(std::span<const std::int64_t> truth, std::span<const std::int64_t> pred, NoisePolicy policy) {
    return adjusted_rand_index(contingency(truth, pred, policy));
}

// ---------------------------------------------------------------------------

double silhouette(const EmbeddingMatrix& x, const ClusterAssignment& v, const SilhouetteOptions& options) {
    if (x.rows() != v.size()) throw ValidationError("silhouette: assignment length differs from rows");
    std::vector<std::size_t> members;
    members.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v.labels()[i] != kNoise) members.push_back(i);
    }
    if (options.subsample && members.size() > *options.subsample) {
        std::mt19937_64 rng(options.seed);
        std::shuffle(members.begin(), members.end(), rng);
        members.resize(*options.subsample);
        std::sort(members.begin(), members.end());
    }

    std::vector<std::int64_t> ids;
    ids.reserve(members.size());
    for (auto i : members) ids.push_back(v.labels()[i]);
    ids = canonicalize_labels(ids);
    const std::size_t k = ids.empty() ? 0 : static_cast<std::size_t>(*std::max_element(ids.begin(), ids.end()) + 1);
    if (k < 2) throw DegenerateInputError("silhouette needs at least two clusters");

    std::vector<std::size_t> sizes(k, 0);
    for (auto c : ids) ++sizes[static_cast<std::size_t>(c)];

    const PointSet points(x.select_rows(members), options.metric);
    const std::size_t n = points.size();
    std::vector<double> sums(k);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(ids[i]);
        if (sizes[own] == 1) continue;  // s_i = 0
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) sums[static_cast<std::size_t>(ids[j])] += points.distance(i, j);
        }
        const double a = sums[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != own) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
        i = j + 1;
    }
    return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("spearman: sequences differ in length");
    if (x.size() < 3) throw DegenerateInputError("spearman: need at least three paired values");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelationError("spearman: zero rank variance");
    return sxy / std::sqrt(sxx * syy);
}

double weighted_knn_accuracy(const EmbeddingMatrix& train_x, const LabelVector& train_y,
                             const EmbeddingMatrix& test_x, const LabelVector& test_y,
                             const KnnProbeOptions& options) {
    if (train_x.empty() || test_x.empty()) throw DegenerateInputError("kNN probe: empty train or test set");
    if (train_x.rows() != train_y.size() || test_x.rows() != test_y.size()) {
        throw ValidationError("kNN probe: labels do not match embeddings");
    }
    if (train_x.cols() != test_x.cols()) throw ValidationError("kNN probe: dimension mismatch");
    if (options.k == 0 || options.k > train_x.rows()) {
        throw ConfigError("kNN probe: k must be in [1, train size]");
    }
    if (!(options.temperature > 0.0)) throw ConfigError("kNN probe: temperature must be positive");

    const PointSet train(train_x, Metric::Cosine);
    const PointSet test(test_x, Metric::Cosine);
    const std::size_t n_train = train.size();
    const std::size_t dims = train.dims();
    std::int64_t n_classes = 0;
    for (auto c : train_y.labels) n_classes = std::max(n_classes, c + 1);

    std::vector<double> sims(n_train);
    std::vector<std::size_t> order(n_train);
    std::vector<double> votes(static_cast<std::size_t>(n_classes));
    std::size_t correct = 0;
    for (std::size_t t = 0; t < test.size(); ++t) {
        const double* q = test.row(t);
        for (std::size_t i = 0; i < n_train; ++i) {
            const double* r = train.row(i);
            double dot = 0.0;
            for (std::size_t j = 0; j < dims; ++j) dot += q[j] * r[j];
            sims[i] = dot;
        }
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(options.k), order.end(),
                          [&](std::size_t a, std::size_t b) { return sims[a] > sims[b] || (sims[a] == sims[b] && a < b); });
        std::fill(votes.begin(), votes.end(), 0.0);
        for (std::size_t r = 0; r < options.k; ++r) {
            const auto i = order[r];
            votes[static_cast<std::size_t>(train_y.labels[i])] += std::exp(sims[i] / options.temperature);
        }
        // max_element returns the first maximum, i.e. the lowest class id on ties
        const auto pred = std::max_element(votes.begin(), votes.end()) - votes.begin();
        if (pred == test_y.labels[t]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace zsclust
