#include "zsclust/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "zsclust/errors.hpp"

namespace zsclust {
namespace {

using json = nlohmann::ordered_json;

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

double weighted_score(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size() || values.empty()) {
        throw ConfigError("weighted score needs one weight per value");
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        num += weights[i] * values[i];
        den += weights[i];
    }
    return num / den;
}

std::vector<double> relative_to_max(std::span<const double> curve) {
    std::vector<double> out(curve.size(), 0.0);
    if (curve.empty()) return out;
    const double top = *std::max_element(curve.begin(), curve.end());
    if (!(top > 0.0)) return out;
    for (std::size_t i = 0; i < curve.size(); ++i) out[i] = curve[i] / top;
    return out;
}

PipelineConfig with_parameter(const PipelineConfig& config, const std::string& pointer, const json& value) {
    json j = to_json(config);
    try {
        const json::json_pointer ptr(pointer);
        if (!j.contains(ptr) && !j.contains(ptr.parent_pointer())) {
            throw ConfigError("search parameter '" + pointer + "' does not name a config field");
        }
        j[ptr] = value;
    } catch (const json::exception& e) {
        throw ConfigError("bad search parameter '" + pointer + "': " + e.what());
    }
    return pipeline_from_json(j);
}

SearchResult staged_search(const PipelineConfig& initial, const std::vector<SearchStage>& stages, std::uint64_t seed,
                           const SearchEvaluator& evaluator) {
    const SearchEvaluator eval = evaluator ? evaluator : [](const DatasetBundle& b, const PipelineConfig& c) {
        return run_pipeline(b, c).result.ami;
    };
    SearchResult result;
    result.config = initial;
    result.config.seed = seed;

    for (const auto& stage : stages) {
        if (stage.candidates.empty()) throw ConfigError("search stage '" + stage.parameter + "' has no candidates");
        if (stage.datasets.empty()) throw ConfigError("search stage '" + stage.parameter + "' has no datasets");
        std::vector<double> weights;
        for (const auto& d : stage.datasets) {
            if (!(d.weight > 0.0)) throw ConfigError("search dataset '" + d.name + "' needs a positive weight");
            if (!d.bundle) throw ConfigError("search dataset '" + d.name + "' has no bundle");
            weights.push_back(d.weight);
        }

        StageReport report;
        report.parameter = stage.parameter;
        report.relative_to_max = stage.relative_to_max.value_or(ends_with(stage.parameter, "distance_threshold"));
        for (const auto& value : stage.candidates) {
            CandidateReport c;
            c.value = value;
            try {
                const PipelineConfig config = with_parameter(result.config, stage.parameter, value);
                for (const auto& d : stage.datasets) {
                    ++result.evaluations;
                    const double v = eval(*d.bundle, config);
                    if (!std::isfinite(v)) throw NumericError("score is undefined on '" + d.name + "'");
                    c.per_dataset.push_back(v);
                }
            } catch (const std::exception& e) {
                c.error = e.what();
                if (c.error.empty()) c.error = "unknown error";
            }
            report.candidates.push_back(std::move(c));
        }

        std::vector<std::size_t> ok;
        for (std::size_t i = 0; i < report.candidates.size(); ++i) {
            if (report.candidates[i].error.empty()) ok.push_back(i);
        }
        if (ok.empty()) {
            std::string msg = "every candidate of stage '" + stage.parameter + "' failed:";
            for (const auto& c : report.candidates) msg += "\n  " + c.value.dump() + ": " + c.error;
            throw SearchError(msg);
        }

        // Optionally normalize each dataset's curve over the surviving candidates.
        std::vector<std::vector<double>> columns(ok.size(), std::vector<double>(stage.datasets.size()));
        for (std::size_t d = 0; d < stage.datasets.size(); ++d) {
            std::vector<double> curve;
            for (std::size_t i : ok) curve.push_back(report.candidates[i].per_dataset[d]);
            if (report.relative_to_max) curve = relative_to_max(curve);
            for (std::size_t k = 0; k < ok.size(); ++k) columns[k][d] = curve[k];
        }
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < ok.size(); ++k) {
            const double s = weighted_score(columns[k], weights);
            report.candidates[ok[k]].score = s;
            if (s > best) {
                best = s;
                report.chosen = ok[k];
            }
        }
        for (std::size_t i = 0; i < report.candidates.size(); ++i) {
            if (!report.candidates[i].error.empty()) report.candidates[i].score = std::numeric_limits<double>::quiet_NaN();
        }
        result.config = with_parameter(result.config, stage.parameter, report.candidates[report.chosen].value);
        result.stages.push_back(std::move(report));
    }
    return result;
}

SearchSpec search_spec_from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ConfigError("search spec must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (key != "initial" && key != "seed" && key != "datasets" && key != "stages") {
            throw ConfigError("search spec: unknown field '" + key + "'");
        }
    }
    SearchSpec spec;
    if (!j.contains("initial")) throw ConfigError("search spec needs an 'initial' pipeline config");
    spec.initial = pipeline_from_json(j["initial"]);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError("search 'seed' must be a non-negative integer");
        spec.seed = j["seed"].get<std::uint64_t>();
    }
    if (!j.contains("datasets") || !j["datasets"].is_array() || j["datasets"].empty()) {
        throw ConfigError("search spec needs a non-empty 'datasets' array");
    }
    std::vector<WeightedDataset> all;
    std::map<std::string, std::size_t> by_name;
    for (const auto& d : j["datasets"]) {
        if (!d.is_object() || !d.contains("name") || !d["name"].is_string() || !d.contains("bundle") ||
            !d["bundle"].is_string()) {
            throw ConfigError("search datasets need string 'name' and 'bundle'");
        }
        WeightedDataset w;
        w.name = d["name"].get<std::string>();
        std::filesystem::path path = d["bundle"].get<std::string>();
        if (path.is_relative()) path = base_dir / path;
        w.bundle = std::make_shared<const DatasetBundle>(load_bundle(path));
        if (d.contains("weight")) {
            if (!d["weight"].is_number()) throw ConfigError("search dataset 'weight' must be a number");
            w.weight = d["weight"].get<double>();
        }
        if (!(w.weight > 0.0)) throw ConfigError("search dataset '" + w.name + "' needs a positive weight");
        if (!by_name.emplace(w.name, all.size()).second) throw ConfigError("duplicate search dataset '" + w.name + "'");
        all.push_back(std::move(w));
    }
    if (!j.contains("stages") || !j["stages"].is_array()) throw ConfigError("search spec needs a 'stages' array");
    for (const auto& s : j["stages"]) {
        if (!s.is_object() || !s.contains("parameter") || !s["parameter"].is_string() || !s.contains("candidates") ||
            !s["candidates"].is_array() || s["candidates"].empty()) {
            throw ConfigError("search stages need a string 'parameter' and non-empty 'candidates'");
        }
        SearchStage stage;
        stage.parameter = s["parameter"].get<std::string>();
        for (const auto& c : s["candidates"]) stage.candidates.push_back(c);
        if (s.contains("datasets")) {
            for (const auto& name : s["datasets"]) {
                const auto it = by_name.find(name.is_string() ? name.get<std::string>() : std::string());
                if (it == by_name.end()) throw ConfigError("search stage names an unknown dataset " + name.dump());
                stage.datasets.push_back(all[it->second]);
            }
        } else {
            stage.datasets = all;
        }
        if (s.contains("relative_to_max")) {
            if (!s["relative_to_max"].is_boolean()) throw ConfigError("'relative_to_max' must be a boolean");
            stage.relative_to_max = s["relative_to_max"].get<bool>();
        }
        spec.stages.push_back(std::move(stage));
    }
    return spec;
}

json to_json(const SearchResult& r) {
    json stages = json::array();
    for (const auto& s : r.stages) {
        json cands = json::array();
        for (const auto& c : s.candidates) {
            json o{{"value", c.value},
                   {"per_dataset", c.per_dataset},
                   {"score", std::isnan(c.score) ? json(nullptr) : json(c.score)}};
            if (!c.error.empty()) o["error"] = c.error;
            cands.push_back(std::move(o));
        }
        stages.push_back(json{{"parameter", s.parameter},
                              {"relative_to_max", s.relative_to_max},
                              {"chosen", s.candidates[s.chosen].value},
                              {"candidates", cands}});
    }
    return json{{"config", to_json(r.config)},
                {"config_hash", config_hash(r.config)},
                {"evaluations", r.evaluations},
                {"stages", stages}};
}

}  // namespace zsclust
