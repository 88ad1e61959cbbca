#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsclust/pipeline.hpp"

namespace zsclust {

struct CellKey {
    std::string encoder;
    std::string dataset;
    std::string clusterer;

    friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

/// One report row. Undefined scores are NaN.
struct ResultRow {
    CellKey key;
    double ami = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
    double sil_orig = 0.0;
    double sil_reduced = 0.0;
    std::size_t n_clusters = 0;
    double clustered_fraction = 1.0;
    double wall_time = 0.0;
    std::uint64_t seed = 0;
    std::string config_hash;

    static ResultRow from_run(CellKey key, const RunResult& r, std::uint64_t seed, std::string config_hash);
    /// Placeholder for a cell that raised: every score NaN, no clusters.
    static ResultRow failed(CellKey key, std::uint64_t seed, std::string config_hash);

    /// Field-wise equality that treats NaN as equal to NaN.
    friend bool operator==(const ResultRow& a, const ResultRow& b);
};

struct CellFailure {
    CellKey key;
    std::string message;
};

class ResultsTable {
public:
    /// Throws ValidationError on a duplicate key or an empty config hash.
    void add(ResultRow row);
    void add_failure(CellFailure failure) { failures_.push_back(std::move(failure)); }

    const std::vector<ResultRow>& rows() const noexcept { return rows_; }
    const std::vector<CellFailure>& failures() const noexcept { return failures_; }
    std::size_t size() const noexcept { return rows_.size(); }
    bool empty() const noexcept { return rows_.empty(); }
    const ResultRow* find(const CellKey& key) const;

    friend bool operator==(const ResultsTable& a, const ResultsTable& b) { return a.rows_ == b.rows_; }

private:
    std::vector<ResultRow> rows_;
    std::map<CellKey, std::size_t> index_;
    std::vector<CellFailure> failures_;
};

/// Column order of the CSV and the JSON row objects.
const std::vector<std::string>& results_columns();

/// Doubles use %.17g so a parse reproduces them bit for bit; NaN is "nan".
std::string to_csv(const ResultsTable& table);
ResultsTable results_from_csv(const std::string& text);
nlohmann::ordered_json to_json(const ResultsTable& table);
ResultsTable results_from_json(const nlohmann::ordered_json& j);

/// Writes `<stem>.csv`, `<stem>.json`, and `<stem>.failures.json` when any
/// cell failed. Throws IoError.
void write_results(const ResultsTable& table, const std::filesystem::path& stem);
/// Reads a .csv or .json results file.
ResultsTable read_results(const std::filesystem::path& path);

/// Formats a double the way the results CSV does.
std::string format_double(double v);
/// Quotes a CSV field when it holds a separator, quote, or line break.
std::string csv_field(const std::string& s);
/// Splits CSV text into records; understands quoted fields.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace zsclust
