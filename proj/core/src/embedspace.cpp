#include "zsclust/embedspace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "zsclust/errors.hpp"
#include "zsclust/npy.hpp"

namespace zsclust {

namespace fs = std::filesystem;

EmbeddingMatrix::EmbeddingMatrix(std::size_t n_samples, std::size_t n_dims, std::vector<float> data)
    : rows_(n_samples), cols_(n_dims), data_(std::move(data)) {
    if (rows_ == 0 || cols_ == 0) {
        throw ValidationError("embedding matrix must have at least one row and one column");
    }
    if (data_.size() != rows_ * cols_) {
        throw ValidationError("embedding data length " + std::to_string(data_.size()) +
                              " does not match shape " + std::to_string(rows_) + "x" +
                              std::to_string(cols_));
    }
    const auto bad = std::find_if(data_.begin(), data_.end(), [](float v) { return !std::isfinite(v); });
    if (bad != data_.end()) {
        const auto idx = static_cast<std::size_t>(bad - data_.begin());
        throw ValidationError("non-finite embedding value at row " + std::to_string(idx / cols_) +
                              ", column " + std::to_string(idx % cols_));
    }
}

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const std::size_t> indices) const {
    std::vector<float> out;
    out.reserve(indices.size() * cols_);
    for (auto i : indices) {
        const auto r = row(i);
        out.insert(out.end(), r.begin(), r.end());
    }
    return {indices.size(), cols_, std::move(out)};
}

LabelVector::LabelVector(std::vector<std::int64_t> ids, std::string name)
    : labels(std::move(ids)), stream_name(std::move(name)) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) {
            throw ValidationError("negative label " + std::to_string(labels[i]) + " at index " +
                                  std::to_string(i) + " in stream '" + stream_name + "'");
        }
    }
}

std::size_t LabelVector::n_classes() const {
    return std::unordered_set<std::int64_t>(labels.begin(), labels.end()).size();
}

ClusterAssignment ClusterAssignment::from_labels(std::span<const std::int64_t> ids) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < kNoise) {
            throw ValidationError("cluster id " + std::to_string(ids[i]) + " at index " +
                                  std::to_string(i) + " is below the noise sentinel");
        }
    }
    ClusterAssignment a;
    a.labels_ = canonicalize_labels(ids);
    std::int64_t top = -1;
    for (auto v : a.labels_) top = std::max(top, v);
    a.n_clusters_ = static_cast<std::size_t>(top + 1);
    return a;
}

std::size_t ClusterAssignment::n_noise() const noexcept {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), kNoise));
}

double ClusterAssignment::clustered_fraction() const noexcept {
    if (labels_.empty()) return 0.0;
    return static_cast<double>(labels_.size() - n_noise()) / static_cast<double>(labels_.size());
}

std::vector<std::int64_t> canonicalize_labels(std::span<const std::int64_t> ids) {
    std::unordered_map<std::int64_t, std::int64_t> remap;
    std::vector<std::int64_t> out;
    out.reserve(ids.size());
    for (auto v : ids) {
        if (v == kNoise) {
            out.push_back(kNoise);
            continue;
        }
        auto [it, inserted] = remap.try_emplace(v, static_cast<std::int64_t>(remap.size()));
        out.push_back(it->second);
    }
    return out;
}

LabelVector canonicalize_labels(const LabelVector& v) {
    LabelVector out;
    out.labels = canonicalize_labels(std::span<const std::int64_t>(v.labels));
    out.stream_name = v.stream_name;
    return out;
}

const LabelVector& DatasetBundle::primary_labels() const {
    if (label_streams.empty()) throw ValidationError("bundle '" + name + "' has no label streams");
    return label_streams.front();
}

const LabelVector& DatasetBundle::stream(const std::string& stream_name) const {
    for (const auto& s : label_streams) {
        if (s.stream_name == stream_name) return s;
    }
    throw ValidationError("bundle '" + name + "' has no label stream '" + stream_name + "'");
}

// ---------------------------------------------------------------------------

namespace {

EmbeddingMatrix to_embeddings(npy::RawArray raw, const fs::path& path) {
    if (raw.header.dtype != npy::DType::Float32 || raw.header.shape.size() != 2) {
        throw FormatError("'" + path.string() + "' is not a 2-D <f4 array");
    }
    return {raw.header.shape[0], raw.header.shape[1], std::move(raw.f32)};
}

std::vector<std::int64_t> to_ids(npy::RawArray raw, const fs::path& path) {
    if (raw.header.dtype != npy::DType::Int64 || raw.header.shape.size() != 1) {
        throw FormatError("'" + path.string() + "' is not a 1-D <i8 array");
    }
    return std::move(raw.i64);
}

}  // namespace

LoadedArray load_array(const fs::path& path) {
    npy::RawArray raw = npy::read(path);
    if (raw.header.dtype == npy::DType::Float32) return to_embeddings(std::move(raw), path);
    return LabelVector(to_ids(std::move(raw), path));
}

EmbeddingMatrix load_embeddings(const fs::path& path) { return to_embeddings(npy::read(path), path); }

LabelVector load_labels(const fs::path& path, std::string stream_name) {
    return LabelVector(to_ids(npy::read(path), path), std::move(stream_name));
}

ClusterAssignment load_assignment(const fs::path& path) {
    const auto ids = to_ids(npy::read(path), path);
    return ClusterAssignment::from_labels(ids);
}

void save_array(const EmbeddingMatrix& x, const fs::path& path) {
    if (x.empty()) throw ValidationError("refusing to save an empty embedding matrix");
    for (float v : x.data()) {
        if (!std::isfinite(v)) throw ValidationError("refusing to save non-finite embeddings");
    }
    const std::size_t shape[2] = {x.rows(), x.cols()};
    npy::write(path, shape, x.data());
}

void save_array(const LabelVector& v, const fs::path& path) {
    for (auto id : v.labels) {
        if (id < 0) throw ValidationError("refusing to save negative label");
    }
    const std::size_t shape[1] = {v.labels.size()};
    npy::write(path, shape, std::span<const std::int64_t>(v.labels));
}

void save_array(const ClusterAssignment& v, const fs::path& path) {
    const std::size_t shape[1] = {v.size()};
    npy::write(path, shape, v.labels());
}

DatasetBundle load_bundle(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest '" + manifest_path.string() + "'");
    nlohmann::ordered_json m;
    try {
        m = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest '" + manifest_path.string() + "': " + e.what());
    }
    if (!m.is_object() || !m.contains("name") || !m.contains("embeddings") || !m.contains("labels")) {
        throw FormatError("manifest '" + manifest_path.string() +
                          "' must contain name, embeddings and labels");
    }
    if (!m["labels"].is_object() || m["labels"].empty()) {
        throw ValidationError("manifest '" + manifest_path.string() + "' lists no label streams");
    }
    const fs::path base = manifest_path.parent_path();
    const auto resolve = [&](const std::string& p) {
        const fs::path rel(p);
        return rel.is_absolute() ? rel : base / rel;
    };

    DatasetBundle b;
    b.name = m["name"].get<std::string>();
    b.embeddings = load_embeddings(resolve(m["embeddings"].get<std::string>()));
    for (const auto& [stream, path] : m["labels"].items()) {
        LabelVector v = load_labels(resolve(path.get<std::string>()), stream);
        if (v.size() != b.embeddings.rows()) {
            throw ValidationError("label stream '" + stream + "' has " + std::to_string(v.size()) +
                                  " entries but embeddings have " +
                                  std::to_string(b.embeddings.rows()) + " rows");
        }
        b.label_streams.push_back(std::move(v));
    }
    if (m.contains("metadata")) b.metadata = m["metadata"];
    return b;
}

fs::path save_bundle(const DatasetBundle& bundle, const fs::path& dir) {
    fs::create_directories(dir);
    nlohmann::ordered_json m;
    m["name"] = bundle.name;
    const std::string emb_file = bundle.name + ".embeddings.npy";
    save_array(bundle.embeddings, dir / emb_file);
    m["embeddings"] = emb_file;
    m["labels"] = nlohmann::ordered_json::object();
    for (const auto& s : bundle.label_streams) {
        if (s.size() != bundle.embeddings.rows()) {
            throw ValidationError("label stream '" + s.stream_name + "' length mismatch");
        }
        const std::string f = bundle.name + "." + s.stream_name + ".npy";
        save_array(s, dir / f);
        m["labels"][s.stream_name] = f;
    }
    m["metadata"] = bundle.metadata;
    const fs::path manifest = dir / (bundle.name + ".json");
    std::ofstream out(manifest);
    if (!out) throw IoError("cannot write manifest '" + manifest.string() + "'");
    out << m.dump(2) << '\n';
    return manifest;
}

}  // namespace zsclust
