#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "test_support.hpp"
#include "zsclust/errors.hpp"
#include "zsclust/metrics.hpp"
#include "zsclust/npy.hpp"

using namespace zsclust;
using namespace zsclust::testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

// Hand-built NPY v1.0 file: header padded so data starts on a 64-byte boundary.
std::string npy_bytes(const std::string& dict, const std::string& payload) {
    std::string header = dict;
    const std::size_t unpadded = 10 + header.size() + 1;
    header.append((64 - unpadded % 64) % 64, ' ');
    header.push_back('\n');
    std::string out = "\x93NUMPY";
    out.push_back('\x01');
    out.push_back('\x00');
    const auto len = static_cast<std::uint16_t>(header.size());
    out.push_back(static_cast<char>(len & 0xff));
    out.push_back(static_cast<char>(len >> 8));
    return out + header + payload;
}

}  // namespace

TEST(Npy, ZeroMatrixRoundTrip) {
    const auto dir = scratch_dir("npy-zero");
    const EmbeddingMatrix x(4, 3, std::vector<float>(12, 0.0f));
    save_array(x, dir / "z.npy");
    const auto back = load_embeddings(dir / "z.npy");
    EXPECT_EQ(back.rows(), 4u);
    EXPECT_EQ(back.cols(), 3u);
    EXPECT_EQ(back, x);
}

TEST(Npy, LabelRoundTrip) {
    const auto dir = scratch_dir("npy-labels");
    save_array(LabelVector({0, 0, 1, 1}), dir / "l.npy");
    const auto loaded = load_array(dir / "l.npy");
    ASSERT_TRUE(std::holds_alternative<LabelVector>(loaded));
    EXPECT_EQ(std::get<LabelVector>(loaded).labels, (Labels{0, 0, 1, 1}));
}

TEST(Npy, RandomMatrixBitwiseRoundTrip) {
    const auto dir = scratch_dir("npy-random");
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng() % 30, d = 1 + rng() % 9;
        std::uniform_real_distribution<float> u(-1e30f, 1e30f);
        std::vector<float> data(n * d);
        for (auto& v : data) v = u(rng);
        data[0] = std::numeric_limits<float>::denorm_min();
        const EmbeddingMatrix x(n, d, data);
        save_array(x, dir / "r.npy");
        const auto bytes = slurp(dir / "r.npy");
        const auto back = load_embeddings(dir / "r.npy");
        ASSERT_EQ(back.rows(), n);
        ASSERT_EQ(std::memcmp(back.data().data(), x.data().data(), n * d * sizeof(float)), 0);
        save_array(back, dir / "r2.npy");
        EXPECT_EQ(slurp(dir / "r2.npy"), bytes);
    }
}

TEST(Npy, HeaderLayoutMatchesFormat) {
    const auto dir = scratch_dir("npy-header");
    save_array(LabelVector({2, 0, 1}), dir / "l.npy");
    const auto bytes = slurp(dir / "l.npy");
    ASSERT_GE(bytes.size(), 10u);
    EXPECT_EQ(bytes.substr(0, 6), "\x93NUMPY");
    EXPECT_EQ(bytes[6], '\x01');
    EXPECT_EQ(bytes[7], '\x00');
    const std::size_t hlen = static_cast<unsigned char>(bytes[8]) | (static_cast<unsigned char>(bytes[9]) << 8);
    EXPECT_EQ((10 + hlen) % 64, 0u);
    const auto header = bytes.substr(10, hlen);
    EXPECT_EQ(header.back(), '\n');
    EXPECT_NE(header.find("'descr': '<i8'"), std::string::npos);
    EXPECT_NE(header.find("'fortran_order': False"), std::string::npos);
    EXPECT_NE(header.find("'shape': (3,)"), std::string::npos);
    EXPECT_EQ(bytes.size(), 10 + hlen + 3 * 8);
    std::int64_t first = 0;
    std::memcpy(&first, bytes.data() + 10 + hlen, 8);
    EXPECT_EQ(first, 2);
}

TEST(Npy, ReadsHandBuiltFile) {
    const auto dir = scratch_dir("npy-hand");
    std::string payload(2 * 2 * 4, '\0');
    const float vals[4] = {1.5f, -2.0f, 0.25f, 8.0f};
    std::memcpy(payload.data(), vals, sizeof vals);
    spit(dir / "h.npy", npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2), }", payload));
    const auto x = load_embeddings(dir / "h.npy");
    EXPECT_EQ(x(0, 1), -2.0f);
    EXPECT_EQ(x(1, 1), 8.0f);
}

TEST(Npy, TruncatedDataIsFormatError) {
    const auto dir = scratch_dir("npy-trunc");
    // Header claims 3 columns; payload holds 2 rows of 2.
    std::string payload(2 * 2 * 4, '\0');
    spit(dir / "t.npy", npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3), }", payload));
    EXPECT_THROW(load_embeddings(dir / "t.npy"), FormatError);
}

TEST(Npy, MalformedInputsAreFormatErrors) {
    const auto dir = scratch_dir("npy-bad");
    spit(dir / "magic.npy", "\x93NUMPX\x01\x00");
    EXPECT_THROW(load_array(dir / "magic.npy"), FormatError);
    spit(dir / "fortran.npy", npy_bytes("{'descr': '<f4', 'fortran_order': True, 'shape': (1, 1), }", "0000"));
    EXPECT_THROW(load_array(dir / "fortran.npy"), FormatError);
    spit(dir / "dtype.npy", npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 1), }", "00000000"));
    EXPECT_THROW(load_array(dir / "dtype.npy"), FormatError);
    spit(dir / "bigend.npy", npy_bytes("{'descr': '>f4', 'fortran_order': False, 'shape': (1, 1), }", "0000"));
    EXPECT_THROW(load_array(dir / "bigend.npy"), FormatError);
    spit(dir / "empty.npy", "");
    EXPECT_THROW(load_array(dir / "empty.npy"), FormatError);
}

TEST(Npy, NonFiniteAndNegativeAreValidationErrors) {
    const auto dir = scratch_dir("npy-invalid");
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::string payload(4, '\0');
    std::memcpy(payload.data(), &nan, 4);
    spit(dir / "nan.npy", npy_bytes("{'descr': '<f4', 'fortran_order': False, 'shape': (1, 1), }", payload));
    EXPECT_THROW(load_embeddings(dir / "nan.npy"), ValidationError);

    const std::int64_t neg = -3;
    std::string lp(8, '\0');
    std::memcpy(lp.data(), &neg, 8);
    spit(dir / "neg.npy", npy_bytes("{'descr': '<i8', 'fortran_order': False, 'shape': (1,), }", lp));
    EXPECT_THROW(load_labels(dir / "neg.npy"), ValidationError);
    // Assignments may carry the noise sentinel.
    spit(dir / "noise.npy", npy_bytes("{'descr': '<i8', 'fortran_order': False, 'shape': (1,), }",
                                      std::string("\xff\xff\xff\xff\xff\xff\xff\xff", 8)));
    EXPECT_EQ(load_assignment(dir / "noise.npy").n_noise(), 1u);
}

TEST(Npy, SavingNanIsValidationError) {
    EXPECT_THROW(EmbeddingMatrix(1, 2, {1.0f, std::numeric_limits<float>::infinity()}), ValidationError);
    EXPECT_THROW(EmbeddingMatrix(1, 1, {std::numeric_limits<float>::quiet_NaN()}), ValidationError);
}

TEST(Npy, UnwritablePathIsIoError) {
    EXPECT_THROW(save_array(LabelVector({0}), "/nonexistent-dir/x/y.npy"), IoError);
    EXPECT_THROW(load_array("/nonexistent-dir/x/y.npy"), IoError);
}

TEST(Canonicalize, Examples) {
    EXPECT_EQ(canonicalize_labels(Labels{5, 5, 9}), (Labels{0, 0, 1}));
    EXPECT_EQ(canonicalize_labels(Labels{0, 1, 2}), (Labels{0, 1, 2}));
    EXPECT_EQ(canonicalize_labels(Labels{-1, 7, 7}), (Labels{-1, 0, 0}));
}

TEST(Canonicalize, PreservesPartition) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + rng() % 40, k = 1 + rng() % std::min<std::size_t>(n, 7);
        Labels v = random_partition(rng, n, k);
        for (auto& x : v) x = x * 13 + 4;  // sparse ids
        const Labels c = canonicalize_labels(v);
        EXPECT_TRUE(same_partition(v, c));
        EXPECT_EQ(canonicalize_labels(c), c);
        EXPECT_EQ(*std::max_element(c.begin(), c.end()) + 1, static_cast<std::int64_t>(k));
    }
}

TEST(Assignment, CountsAndFraction) {
    const auto a = ClusterAssignment::from_labels(Labels{3, -1, 3, 8, -1});
    EXPECT_EQ(a.n_clusters(), 2u);
    EXPECT_EQ(a.n_noise(), 2u);
    EXPECT_DOUBLE_EQ(a.clustered_fraction(), 0.6);
    EXPECT_EQ(std::vector<std::int64_t>(a.labels().begin(), a.labels().end()), (Labels{0, -1, 0, 1, -1}));
    EXPECT_EQ(ClusterAssignment::from_labels(Labels{-1, -1}).n_clusters(), 0u);
    EXPECT_THROW(ClusterAssignment::from_labels(Labels{-2, 0}), ValidationError);
}

TEST(Bundle, SaveLoadOneAndTwoStreams) {
    const auto dir = scratch_dir("bundle");
    std::mt19937_64 rng(3);
    DatasetBundle b = make_bundle("toy", random_matrix(rng, 6, 3), {0, 1, 0, 1, 2, 2});
    auto manifest = save_bundle(b, dir);
    auto back = load_bundle(manifest);
    EXPECT_EQ(back.label_streams.size(), 1u);
    EXPECT_EQ(back.embeddings, b.embeddings);

    b.label_streams.push_back(LabelVector({0, 0, 1, 1, 2, 3}, "artform"));
    b.metadata["imbalance"] = 1.5;
    manifest = save_bundle(b, dir);
    back = load_bundle(manifest);
    ASSERT_EQ(back.label_streams.size(), 2u);
    EXPECT_EQ(back.stream("artform").labels, b.label_streams[1].labels);
    EXPECT_EQ(back.metadata["imbalance"], 1.5);
    EXPECT_EQ(back.primary_labels().stream_name, "class");
}

TEST(Bundle, LengthMismatchNamesStream) {
    const auto dir = scratch_dir("bundle-bad");
    std::mt19937_64 rng(4);
    save_array(random_matrix(rng, 5, 2), dir / "x.npy");
    save_array(LabelVector({0, 1, 0, 1, 0}), dir / "good.npy");
    save_array(LabelVector({0, 1, 0, 1}), dir / "short.npy");
    nlohmann::json m{{"name", "bad"},
                     {"embeddings", "x.npy"},
                     {"labels", {{"class", "good.npy"}, {"magnification", "short.npy"}}},
                     {"metadata", nlohmann::json::object()}};
    spit(dir / "bad.json", m.dump());
    try {
        load_bundle(dir / "bad.json");
        FAIL() << "expected a validation error";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("magnification"), std::string::npos);
    }
}

TEST(Bundle, RejectsEveryInconsistentLength) {
    const auto dir = scratch_dir("bundle-prop");
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 2 + rng() % 20;
        std::size_t m = rng() % 25 + 1;
        if (m == n) ++m;
        save_array(random_matrix(rng, n, 2), dir / "x.npy");
        save_array(LabelVector(Labels(m, 0)), dir / "y.npy");
        nlohmann::json j{{"name", "p"}, {"embeddings", "x.npy"}, {"labels", {{"class", "y.npy"}}}, {"metadata", nlohmann::json::object()}};
        spit(dir / "p.json", j.dump());
        EXPECT_THROW(load_bundle(dir / "p.json"), ValidationError);
    }
}
