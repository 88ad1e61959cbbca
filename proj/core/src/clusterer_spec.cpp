#include <cmath>
#include <set>
#include <string>

#include "zsclust/cluster.hpp"
#include "zsclust/errors.hpp"

namespace zsclust {
namespace {

using json = nlohmann::ordered_json;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(std::string(what) + ": unknown field '" + key + "'");
    }
}

std::size_t get_count(const json& v, std::string_view field) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw ConfigError("field '" + std::string(field) + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

double get_number(const json& v, std::string_view field) {
    if (!v.is_number()) throw ConfigError("field '" + std::string(field) + "' must be a number");
    return v.get<double>();
}

std::optional<std::size_t> get_k(const json& v) {
    if (v.is_null() || (v.is_string() && v.get<std::string>() == "auto")) return std::nullopt;
    return get_count(v, "k");
}

json k_to_json(const std::optional<std::size_t>& k) { return k ? json(*k) : json("auto"); }

Metric get_metric(const json& v) {
    if (!v.is_string()) throw ConfigError("field 'metric' must be a string");
    return parse_metric(v.get<std::string>());
}

}  // namespace

std::string_view to_string(Linkage l) noexcept {
    switch (l) {
        case Linkage::Ward: return "ward";
        case Linkage::Complete: return "complete";
        case Linkage::Average: return "average";
        case Linkage::Single: return "single";
    }
    return "ward";
}

Linkage parse_linkage(std::string_view name) {
    if (name == "ward") return Linkage::Ward;
    if (name == "complete") return Linkage::Complete;
    if (name == "average") return Linkage::Average;
    if (name == "single") return Linkage::Single;
    throw ConfigError("unknown linkage '" + std::string(name) + "'");
}

std::string_view clusterer_kind(const ClustererSpec& spec) noexcept {
    return std::visit(overloaded{
                          [](const KMeansSpec&) { return std::string_view("kmeans"); },
                          [](const SpectralSpec&) { return std::string_view("spectral"); },
                          [](const AgglomerativeSpec&) { return std::string_view("agglomerative"); },
                          [](const AffinityPropagationSpec&) { return std::string_view("affinity_propagation"); },
                          [](const HdbscanSpec&) { return std::string_view("hdbscan"); },
                      },
                      spec);
}

void validate(const ClustererSpec& spec) {
    const auto check_k = [](const std::optional<std::size_t>& k) {
        if (k && *k < 1) throw ConfigError("cluster count must be at least 1");
    };
    std::visit(overloaded{
                   [&](const KMeansSpec& s) {
                       check_k(s.k);
                       if (s.n_init < 1) throw ConfigError("kmeans n_init must be at least 1");
                       if (!(s.tol >= 0.0)) throw ConfigError("kmeans tol must be non-negative");
                       if (s.max_iter < 1) throw ConfigError("kmeans max_iter must be at least 1");
                   },
                   [&](const SpectralSpec& s) {
                       check_k(s.k);
                       if (s.n_neighbors < 2) throw ConfigError("spectral n_neighbors must be at least 2");
                   },
                   [&](const AgglomerativeSpec& s) {
                       if (s.linkage == Linkage::Ward && s.metric != Metric::L2) {
                           throw ConfigError("ward linkage requires the L2 metric");
                       }
                       if (const auto* n = std::get_if<NClusters>(&s.stop)) {
                           check_k(n->k);
                       } else if (!(std::get<DistanceThreshold>(s.stop).t > 0.0)) {
                           throw ConfigError("distance threshold must be positive");
                       }
                   },
                   [&](const AffinityPropagationSpec& s) {
                       if (!(s.damping >= 0.5 && s.damping < 1.0)) {
                           throw ConfigError("affinity propagation damping must lie in [0.5, 1)");
                       }
                       if (s.max_iter < 1 || s.convergence_iter < 1) {
                           throw ConfigError("affinity propagation iteration counts must be at least 1");
                       }
                       if (s.preference && !std::isfinite(*s.preference)) {
                           throw ConfigError("affinity propagation preference must be finite");
                       }
                   },
                   [&](const HdbscanSpec& s) {
                       if (s.min_cluster_size < 2) throw ConfigError("hdbscan min_cluster_size must be at least 2");
                       if (s.min_samples && *s.min_samples < 1) {
                           throw ConfigError("hdbscan min_samples must be at least 1");
                       }
                       if (!(s.max_cluster_size_fraction > 0.0 && s.max_cluster_size_fraction <= 1.0)) {
                           throw ConfigError("hdbscan max_cluster_size_fraction must lie in (0, 1]");
                       }
                   },
               },
               spec);
}

bool needs_cluster_count(const ClustererSpec& spec) noexcept {
    return std::visit(overloaded{
                          [](const KMeansSpec& s) { return !s.k.has_value(); },
                          [](const SpectralSpec& s) { return !s.k.has_value(); },
                          [](const AgglomerativeSpec& s) {
                              const auto* n = std::get_if<NClusters>(&s.stop);
                              return n != nullptr && !n->k.has_value();
                          },
                          [](const auto&) { return false; },
                      },
                      spec);
}

ClustererSpec with_cluster_count(const ClustererSpec& spec, std::size_t k) {
    ClustererSpec out = spec;
    std::visit(overloaded{
                   [&](KMeansSpec& s) { s.k = s.k.value_or(k); },
                   [&](SpectralSpec& s) { s.k = s.k.value_or(k); },
                   [&](AgglomerativeSpec& s) {
                       if (auto* n = std::get_if<NClusters>(&s.stop)) n->k = n->k.value_or(k);
                   },
                   [](auto&) {},
               },
               out);
    return out;
}

nlohmann::ordered_json to_json(const ClustererSpec& spec) {
    json j;
    j["kind"] = std::string(clusterer_kind(spec));
    std::visit(overloaded{
                   [&](const KMeansSpec& s) {
                       j["k"] = k_to_json(s.k);
                       j["n_init"] = s.n_init;
                       j["tol"] = s.tol;
                       j["max_iter"] = s.max_iter;
                   },
                   [&](const SpectralSpec& s) {
                       j["k"] = k_to_json(s.k);
                       j["n_neighbors"] = s.n_neighbors;
                   },
                   [&](const AgglomerativeSpec& s) {
                       j["metric"] = std::string(to_string(s.metric));
                       j["linkage"] = std::string(to_string(s.linkage));
                       if (const auto* n = std::get_if<NClusters>(&s.stop)) {
                           j["stop"] = json{{"n_clusters", k_to_json(n->k)}};
                       } else {
                           j["stop"] = json{{"distance_threshold", std::get<DistanceThreshold>(s.stop).t}};
                       }
                   },
                   [&](const AffinityPropagationSpec& s) {
                       j["damping"] = s.damping;
                       j["max_iter"] = s.max_iter;
                       j["convergence_iter"] = s.convergence_iter;
                       j["preference"] = s.preference ? json(*s.preference) : json("median");
                   },
                   [&](const HdbscanSpec& s) {
                       j["min_cluster_size"] = s.min_cluster_size;
                       j["min_samples"] = s.min_samples ? json(*s.min_samples) : json(nullptr);
                       j["max_cluster_size_fraction"] = s.max_cluster_size_fraction;
                       j["metric"] = std::string(to_string(s.metric));
                   },
               },
               spec);
    return j;
}

ClustererSpec clusterer_from_json(const nlohmann::ordered_json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
        throw ConfigError("clusterer config needs a string 'kind'");
    }
    const std::string kind = j["kind"].get<std::string>();
    ClustererSpec out;
    if (kind == "kmeans") {
        check_keys(j, {"kind", "k", "n_init", "tol", "max_iter"}, "kmeans");
        KMeansSpec s;
        if (j.contains("k")) s.k = get_k(j["k"]);
        if (j.contains("n_init")) s.n_init = get_count(j["n_init"], "n_init");
        if (j.contains("tol")) s.tol = get_number(j["tol"], "tol");
        if (j.contains("max_iter")) s.max_iter = get_count(j["max_iter"], "max_iter");
        out = s;
    } else if (kind == "spectral") {
        check_keys(j, {"kind", "k", "n_neighbors"}, "spectral");
        SpectralSpec s;
        if (j.contains("k")) s.k = get_k(j["k"]);
        if (j.contains("n_neighbors")) s.n_neighbors = get_count(j["n_neighbors"], "n_neighbors");
        out = s;
    } else if (kind == "agglomerative") {
        check_keys(j, {"kind", "metric", "linkage", "stop"}, "agglomerative");
        AgglomerativeSpec s;
        if (j.contains("metric")) s.metric = get_metric(j["metric"]);
        if (j.contains("linkage")) {
            if (!j["linkage"].is_string()) throw ConfigError("field 'linkage' must be a string");
            s.linkage = parse_linkage(j["linkage"].get<std::string>());
        }
        if (j.contains("stop")) {
            const json& stop = j["stop"];
            if (!stop.is_object() || stop.size() != 1) {
                throw ConfigError("'stop' must hold exactly one of n_clusters or distance_threshold");
            }
            if (stop.contains("n_clusters")) {
                s.stop = NClusters{get_k(stop["n_clusters"])};
            } else if (stop.contains("distance_threshold")) {
                s.stop = DistanceThreshold{get_number(stop["distance_threshold"], "distance_threshold")};
            } else {
                throw ConfigError("'stop' must hold exactly one of n_clusters or distance_threshold");
            }
        }
        out = s;
    } else if (kind == "affinity_propagation") {
        check_keys(j, {"kind", "damping", "max_iter", "convergence_iter", "preference"}, "affinity_propagation");
        AffinityPropagationSpec s;
        if (j.contains("damping")) s.damping = get_number(j["damping"], "damping");
        if (j.contains("max_iter")) s.max_iter = get_count(j["max_iter"], "max_iter");
        if (j.contains("convergence_iter")) s.convergence_iter = get_count(j["convergence_iter"], "convergence_iter");
        if (j.contains("preference")) {
            const json& p = j["preference"];
            if (p.is_string() && p.get<std::string>() == "median") {
                s.preference.reset();
            } else {
                s.preference = get_number(p, "preference");
            }
        }
        out = s;
    } else if (kind == "hdbscan") {
        check_keys(j, {"kind", "min_cluster_size", "min_samples", "max_cluster_size_fraction", "metric"}, "hdbscan");
        HdbscanSpec s;
        if (j.contains("min_cluster_size")) s.min_cluster_size = get_count(j["min_cluster_size"], "min_cluster_size");
        if (j.contains("min_samples") && !j["min_samples"].is_null()) {
            s.min_samples = get_count(j["min_samples"], "min_samples");
        }
        if (j.contains("max_cluster_size_fraction")) {
            s.max_cluster_size_fraction = get_number(j["max_cluster_size_fraction"], "max_cluster_size_fraction");
        }
        if (j.contains("metric")) s.metric = get_metric(j["metric"]);
        out = s;
    } else {
        throw ConfigError("unknown clusterer kind '" + kind + "'");
    }
    validate(out);
    return out;
}

ClusterOutcome run_clusterer(const EmbeddingMatrix& x, const ClustererSpec& spec, std::uint64_t seed) {
    validate(spec);
    if (needs_cluster_count(spec)) throw ConfigError("cluster count left as 'auto' was never resolved");
    return std::visit(overloaded{
                          [&](const KMeansSpec& s) { return ClusterOutcome{kmeans(x, s, seed).assignment, true}; },
                          [&](const SpectralSpec& s) { return ClusterOutcome{spectral(x, s, seed).assignment, true}; },
                          [&](const AgglomerativeSpec& s) {
                              return ClusterOutcome{agglomerative(x, s).assignment, true};
                          },
                          [&](const AffinityPropagationSpec& s) {
                              auto r = affinity_propagation(x, s, seed);
                              return ClusterOutcome{std::move(r.assignment), r.converged};
                          },
                          [&](const HdbscanSpec& s) { return ClusterOutcome{hdbscan(x, s).assignment, true}; },
                      },
                      spec);
}

}  // namespace zsclust
