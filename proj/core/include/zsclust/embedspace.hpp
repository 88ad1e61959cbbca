#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace zsclust {

/// Reserved id marking a sample that a density clusterer left unassigned.
inline constexpr std::int64_t kNoise = -1;

/// N x D row-major float32 embeddings. Every value is finite.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;

    /// Throws ValidationError on empty shape, size mismatch, or non-finite data.
    EmbeddingMatrix(std::size_t n_samples, std::size_t n_dims, std::vector<float> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    std::span<const float> data() const noexcept { return data_; }
    std::span<const float> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    float operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    /// Rows selected by `indices`, in that order.
    EmbeddingMatrix select_rows(std::span<const std::size_t> indices) const;

    friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> data_;
};

/// One ground-truth annotation stream: non-negative class ids per sample.
struct LabelVector {
    std::vector<std::int64_t> labels;
    std::string stream_name = "class";

    LabelVector() = default;
    /// Throws ValidationError on any negative id.
    explicit LabelVector(std::vector<std::int64_t> ids, std::string name = "class");

    std::size_t size() const noexcept { return labels.size(); }
    /// Number of distinct ids.
    std::size_t n_classes() const;

    friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

/// Predicted partition. Non-noise ids are dense in [0, n_clusters); kNoise marks noise.
class ClusterAssignment {
public:
    ClusterAssignment() = default;

    /// Canonicalizes arbitrary ids (order of first appearance); -1 stays noise.
    /// Throws ValidationError on ids below -1.
    static ClusterAssignment from_labels(std::span<const std::int64_t> ids);

    std::span<const std::int64_t> labels() const noexcept { return labels_; }
    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t n_clusters() const noexcept { return n_clusters_; }
    std::size_t n_noise() const noexcept;
    /// Share of samples placed into a cluster.
    double clustered_fraction() const noexcept;

    friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;

private:
    std::vector<std::int64_t> labels_;
    std::size_t n_clusters_ = 0;
};

/// Remap ids to 0..K-1 in order of first appearance; kNoise is preserved.
std::vector<std::int64_t> canonicalize_labels(std::span<const std::int64_t> ids);
LabelVector canonicalize_labels(const LabelVector& v);

/// A (dataset, encoder) evaluation unit.
struct DatasetBundle {
    std::string name;
    EmbeddingMatrix embeddings;
    std::vector<LabelVector> label_streams;
    nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

    /// First stream in manifest order. Throws ValidationError if there is none.
    const LabelVector& primary_labels() const;
    /// Throws ValidationError when the stream is missing.
    const LabelVector& stream(const std::string& name) const;
};

// ---------------------------------------------------------------------------
// File I/O. Embeddings are '<f4' 2-D and labels '<i8' 1-D NPY v1.0 arrays.

using LoadedArray = std::variant<EmbeddingMatrix, LabelVector>;

/// Dispatches on the dtype in the header.
LoadedArray load_array(const std::filesystem::path& path);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
LabelVector load_labels(const std::filesystem::path& path, std::string stream_name = "class");
/// Like load_labels but accepts the noise sentinel.
ClusterAssignment load_assignment(const std::filesystem::path& path);

void save_array(const EmbeddingMatrix& x, const std::filesystem::path& path);
void save_array(const LabelVector& v, const std::filesystem::path& path);
void save_array(const ClusterAssignment& v, const std::filesystem::path& path);

/// Manifest: {"name", "embeddings", "labels": {stream: path}, "metadata"}.
/// Relative paths resolve against the manifest's directory.
DatasetBundle load_bundle(const std::filesystem::path& manifest_path);

/// Writes `<dir>/<name>.embeddings.npy`, one `<name>.<stream>.npy` per stream,
/// and `<dir>/<name>.json`. Returns the manifest path.
std::filesystem::path save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);

}  // namespace zsclust
