#include "zsclust/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "zsclust/errors.hpp"

namespace zsclust {
namespace {

using json = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

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

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double scored_or_nan(auto&& fn) {
    try {
        return fn();
    } catch (const DegenerateInputError&) {
        return kNaN;
    }
}

}  // namespace

json to_json(const ReductionSpec& r) {
    return std::visit(overloaded{
                          [](const NoReduction&) { return json{{"kind", "none"}}; },
                          [](const ZScoreOnly&) { return json{{"kind", "zscore"}}; },
                          [](const PcaReduction& p) {
                              json j{{"kind", "pca"}};
                              if (const auto* d = std::get_if<PcaDims>(&p.target)) {
                                  j["dims"] = d->dims;
                              } else {
                                  j["variance_fraction"] = std::get<PcaVarianceFraction>(p.target).fraction;
                              }
                              return j;
                          },
                          [](const UmapReduction& u) {
                              return json{{"kind", "umap"},
                                          {"out_dims", u.out_dims},
                                          {"n_neighbors", u.n_neighbors},
                                          {"min_dist", u.min_dist}};
                          },
                      },
                      r);
}

ReductionSpec reduction_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
        throw ConfigError("reduction config needs a string 'kind'");
    }
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "none") {
        check_keys(j, {"kind"}, "reduction none");
        return NoReduction{};
    }
    if (kind == "zscore") {
        check_keys(j, {"kind"}, "reduction zscore");
        return ZScoreOnly{};
    }
    if (kind == "pca") {
        check_keys(j, {"kind", "dims", "variance_fraction"}, "reduction pca");
        const bool dims = j.contains("dims");
        if (dims == j.contains("variance_fraction")) {
            throw ConfigError("pca reduction needs exactly one of 'dims' or 'variance_fraction'");
        }
        if (dims) return PcaReduction{PcaDims{get_count(j["dims"], "dims")}};
        return PcaReduction{PcaVarianceFraction{get_number(j["variance_fraction"], "variance_fraction")}};
    }
    if (kind == "umap") {
        check_keys(j, {"kind", "out_dims", "n_neighbors", "min_dist"}, "reduction umap");
        UmapReduction u;
        if (j.contains("out_dims")) u.out_dims = get_count(j["out_dims"], "out_dims");
        if (j.contains("n_neighbors")) u.n_neighbors = get_count(j["n_neighbors"], "n_neighbors");
        if (j.contains("min_dist")) u.min_dist = get_number(j["min_dist"], "min_dist");
        return u;
    }
    throw ConfigError("unknown reduction kind '" + kind + "'");
}

json to_json(const PipelineConfig& c) {
    return json{{"reduction", to_json(c.reduction)},
                {"clusterer", to_json(c.clusterer)},
                {"seed", c.seed},
                {"noise_policy", std::string(to_string(c.noise_policy))}};
}

PipelineConfig pipeline_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("pipeline config must be a JSON object");
    check_keys(j, {"reduction", "clusterer", "seed", "noise_policy"}, "pipeline");
    PipelineConfig c;
    if (j.contains("reduction")) c.reduction = reduction_from_json(j["reduction"]);
    if (!j.contains("clusterer")) throw ConfigError("pipeline config needs a 'clusterer'");
    c.clusterer = clusterer_from_json(j["clusterer"]);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError("field 'seed' must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("noise_policy")) {
        if (!j["noise_policy"].is_string()) throw ConfigError("field 'noise_policy' must be a string");
        c.noise_policy = parse_noise_policy(j["noise_policy"].get<std::string>());
    }
    validate(c);
    return c;
}

void validate(const PipelineConfig& c) {
    std::visit(overloaded{
                   [](const PcaReduction& p) {
                       if (const auto* d = std::get_if<PcaDims>(&p.target)) {
                           if (d->dims < 1) throw ConfigError("pca dims must be at least 1");
                       } else {
                           const double v = std::get<PcaVarianceFraction>(p.target).fraction;
                           if (!(v > 0.0 && v <= 1.0)) throw ConfigError("pca variance_fraction must lie in (0, 1]");
                       }
                   },
                   [](const UmapReduction& u) {
                       if (u.out_dims < 2) throw ConfigError("umap out_dims must be at least 2");
                       if (u.n_neighbors < 2) throw ConfigError("umap n_neighbors must be at least 2");
                       if (!(u.min_dist >= 0.0)) throw ConfigError("umap min_dist must be non-negative");
                   },
                   [](const auto&) {},
               },
               c.reduction);
    validate(c.clusterer);
}

std::string config_hash(const PipelineConfig& c) {
    const std::string text = to_json(c).dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

EmbeddingMatrix apply_reduction(const EmbeddingMatrix& x, const ReductionSpec& r, std::uint64_t seed) {
    return std::visit(overloaded{
                          [&](const NoReduction&) { return x; },
                          [&](const ZScoreOnly&) { return zscore(x); },
                          [&](const PcaReduction& p) { return pca_transform(pca_fit(x, p.target), x); },
                          [&](const UmapReduction& u) {
                              UmapParams params;
                              params.out_dims = u.out_dims;
                              params.n_neighbors = u.n_neighbors;
                              params.min_dist = u.min_dist;
                              params.seed = seed;
                              return umap_embed(x, params);
                          },
                      },
                      r);
}

json to_json(const RunResult& r) {
    json streams = json::array();
    for (const auto& s : r.streams) {
        streams.push_back(
            json{{"stream", s.stream}, {"ami", nullable(s.ami)}, {"nmi", nullable(s.nmi)}, {"ari", nullable(s.ari)}});
    }
    return json{{"ami", nullable(r.ami)},
                {"nmi", nullable(r.nmi)},
                {"ari", nullable(r.ari)},
                {"silhouette_original", nullable(r.silhouette_original)},
                {"silhouette_reduced", nullable(r.silhouette_reduced)},
                {"n_clusters", r.n_clusters},
                {"clustered_fraction", r.clustered_fraction},
                {"wall_time", r.wall_time},
                {"ami_excluding_noise", nullable(r.ami_excluding_noise)},
                {"converged", r.converged},
                {"streams", streams}};
}

RunResult score_assignment(const DatasetBundle& bundle, const EmbeddingMatrix& reduced,
                           const ClusterAssignment& assignment, NoisePolicy policy, std::uint64_t seed,
                           const RunOptions& options) {
    if (assignment.size() != bundle.embeddings.rows() || reduced.rows() != bundle.embeddings.rows()) {
        throw ValidationError("assignment length does not match the bundle");
    }
    RunResult r;
    for (const auto& stream : bundle.label_streams) {
        StreamScores s{stream.stream_name, 0.0, 0.0, 0.0};
        s.ami = scored_or_nan([&] { return ami(stream, assignment, policy); });
        s.nmi = scored_or_nan([&] { return nmi(stream, assignment, policy); });
        s.ari = scored_or_nan([&] { return ari(stream, assignment, policy); });
        r.streams.push_back(std::move(s));
    }
    const LabelVector& primary = bundle.primary_labels();
    r.ami = r.streams.front().ami;
    r.nmi = r.streams.front().nmi;
    r.ari = r.streams.front().ari;
    r.ami_excluding_noise = scored_or_nan([&] { return ami(primary, assignment, NoisePolicy::ExcludeNoise); });
    r.n_clusters = assignment.n_clusters();
    r.clustered_fraction = assignment.clustered_fraction();

    SilhouetteOptions sil;
    sil.subsample = options.silhouette_subsample;
    sil.seed = seed;
    r.silhouette_original = scored_or_nan([&] { return silhouette(bundle.embeddings, assignment, sil); });
    r.silhouette_reduced = scored_or_nan([&] { return silhouette(reduced, assignment, sil); });
    return r;
}

PipelineRun run_pipeline(const DatasetBundle& bundle, const PipelineConfig& config, const RunOptions& options) {
    validate(config);
    const auto start = std::chrono::steady_clock::now();
    const EmbeddingMatrix reduced = apply_reduction(bundle.embeddings, config.reduction, config.seed);

    ClustererSpec spec = config.clusterer;
    if (needs_cluster_count(spec)) spec = with_cluster_count(spec, bundle.primary_labels().n_classes());
    const auto* agg = std::get_if<AgglomerativeSpec>(&spec);
    const bool threshold = agg != nullptr && std::holds_alternative<DistanceThreshold>(agg->stop);
    const ClusterOutcome outcome = threshold
                                       ? run_clusterer(standardize_for_threshold(reduced, agg->metric), spec, config.seed)
                                       : run_clusterer(reduced, spec, config.seed);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    PipelineRun run;
    run.assignment = outcome.assignment;
    run.result = score_assignment(bundle, reduced, outcome.assignment, config.noise_policy, config.seed, options);
    run.result.wall_time = elapsed;
    run.result.converged = outcome.converged;
    return run;
}

}  // namespace zsclust
