#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "zsclust/cluster.hpp"
#include "zsclust/errors.hpp"

namespace zsclust {
namespace {

double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace

AffinityPropagationResult affinity_propagation(const EmbeddingMatrix& x, const AffinityPropagationSpec& spec,
                                               std::uint64_t seed) {
    validate(ClustererSpec{spec});
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    AffinityPropagationResult result;

    // Similarity: negative squared Euclidean distance.
    std::vector<double> s(n * n, 0.0);
    std::vector<double> off_diagonal;
    off_diagonal.reserve(n * (n - 1));
    const auto data = x.data();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = static_cast<double>(data[i * d + c]) - static_cast<double>(data[j * d + c]);
                acc += diff * diff;
            }
            s[i * n + j] = -acc;
            s[j * n + i] = -acc;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) off_diagonal.push_back(s[i * n + j]);
        }
    }

    const auto finish = [&](std::vector<std::int64_t> labels, std::vector<std::size_t> exemplars, bool converged,
                            std::size_t iterations) {
        result.assignment = ClusterAssignment::from_labels(labels);
        result.exemplars = std::move(exemplars);
        result.converged = converged;
        result.iterations = iterations;
        return result;
    };

    if (n == 1) return finish({0}, {0}, true, 0);
    const double preference = spec.preference.value_or(median(off_diagonal));

    // Identical similarities leave the messages without a gradient: either
    // every point is its own exemplar or one exemplar takes everything.
    const bool all_equal = std::all_of(off_diagonal.begin(), off_diagonal.end(),
                                       [&](double v) { return v == off_diagonal.front(); });
    if (all_equal) {
        if (preference > off_diagonal.front()) {
            std::vector<std::int64_t> labels(n);
            std::vector<std::size_t> exemplars(n);
            for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::int64_t>(exemplars[i] = i);
            return finish(std::move(labels), std::move(exemplars), true, 0);
        }
        return finish(std::vector<std::int64_t>(n, 0), {0}, true, 0);
    }
    off_diagonal = {};

    for (std::size_t i = 0; i < n; ++i) s[i * n + i] = preference;
    // Tiny seeded jitter breaks exact ties between candidate exemplars.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr double tiny = std::numeric_limits<double>::min();
    for (double& v : s) v += (eps * v + tiny * 100.0) * normal(rng);

    const double damping = spec.damping;
    const double keep = 1.0 - damping;
    std::vector<double> r(n * n, 0.0), a(n * n, 0.0), col(n);
    const std::size_t conv = spec.convergence_iter;
    std::vector<std::uint8_t> history(n * conv, 0);
    std::vector<std::uint8_t> is_exemplar(n, 0);
    bool converged = false;
    std::size_t it = 0;
    for (; it < spec.max_iter; ++it) {
        // Responsibilities.
        for (std::size_t i = 0; i < n; ++i) {
            const double* ai = &a[i * n];
            const double* si = &s[i * n];
            double best = -std::numeric_limits<double>::infinity(), second = best;
            std::size_t arg = 0;
            for (std::size_t k = 0; k < n; ++k) {
                const double v = ai[k] + si[k];
                if (v > best) {
                    second = best;
                    best = v;
                    arg = k;
                } else if (v > second) {
                    second = v;
                }
            }
            double* ri = &r[i * n];
            for (std::size_t k = 0; k < n; ++k) {
                const double update = si[k] - (k == arg ? second : best);
                ri[k] = damping * ri[k] + keep * update;
            }
        }
        // Availabilities.
        std::fill(col.begin(), col.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* ri = &r[i * n];
            for (std::size_t k = 0; k < n; ++k) col[k] += (i == k) ? ri[k] : std::max(ri[k], 0.0);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double* ri = &r[i * n];
            double* ai = &a[i * n];
            for (std::size_t k = 0; k < n; ++k) {
                double update;
                if (i == k) {
                    update = col[k] - ri[k];
                } else {
                    update = std::min(col[k] - std::max(ri[k], 0.0), 0.0);
                }
                ai[k] = damping * ai[k] + keep * update;
            }
        }

        std::size_t n_exemplars = 0;
        for (std::size_t k = 0; k < n; ++k) {
            is_exemplar[k] = (a[k * n + k] + r[k * n + k]) > 0.0 ? 1 : 0;
            history[k * conv + it % conv] = is_exemplar[k];
            n_exemplars += is_exemplar[k];
        }
        if (it >= conv) {
            bool stable = true;
            for (std::size_t k = 0; k < n && stable; ++k) {
                std::size_t sum = 0;
                for (std::size_t c = 0; c < conv; ++c) sum += history[k * conv + c];
                stable = sum == 0 || sum == conv;
            }
            if (stable && n_exemplars > 0) {
                converged = true;
                ++it;
                break;
            }
        }
    }

    std::vector<std::size_t> exemplars;
    for (std::size_t k = 0; k < n; ++k) {
        if (is_exemplar[k]) exemplars.push_back(k);
    }
    if (exemplars.empty()) return finish(std::vector<std::int64_t>(n, kNoise), {}, converged, it);

    const auto nearest = [&](const std::vector<std::size_t>& centres) {
        std::vector<std::size_t> c(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t arg = 0;
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t e = 0; e < centres.size(); ++e) {
                if (s[i * n + centres[e]] > best) {
                    best = s[i * n + centres[e]];
                    arg = e;
                }
            }
            c[i] = arg;
        }
        for (std::size_t e = 0; e < centres.size(); ++e) c[centres[e]] = e;
        return c;
    };

    // Refine: each cluster's exemplar becomes its member with the largest total similarity.
    std::vector<std::size_t> c = nearest(exemplars);
    for (std::size_t e = 0; e < exemplars.size(); ++e) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i) {
            if (c[i] == e) members.push_back(i);
        }
        double best = -std::numeric_limits<double>::infinity();
        std::size_t arg = exemplars[e];
        for (std::size_t cand : members) {
            double total = 0.0;
            for (std::size_t m : members) total += s[m * n + cand];
            if (total > best) {
                best = total;
                arg = cand;
            }
        }
        exemplars[e] = arg;
    }
    c = nearest(exemplars);

    std::vector<std::size_t> chosen(n);
    for (std::size_t i = 0; i < n; ++i) chosen[i] = exemplars[c[i]];
    std::vector<std::size_t> unique_exemplars = chosen;
    std::sort(unique_exemplars.begin(), unique_exemplars.end());
    unique_exemplars.erase(std::unique(unique_exemplars.begin(), unique_exemplars.end()), unique_exemplars.end());
    std::vector<std::int64_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = std::lower_bound(unique_exemplars.begin(), unique_exemplars.end(), chosen[i]) -
                    unique_exemplars.begin();
    }
    // Exemplar list follows the canonical label order.
    ClusterAssignment canonical = ClusterAssignment::from_labels(labels);
    std::vector<std::size_t> ordered(canonical.n_clusters());
    for (std::size_t i = 0; i < n; ++i) ordered[static_cast<std::size_t>(canonical.labels()[i])] = chosen[i];
    return finish(std::move(labels), std::move(ordered), converged, it);
}

}  // namespace zsclust
