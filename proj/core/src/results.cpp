#include "zsclust/results.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "zsclust/errors.hpp"

namespace zsclust {
namespace {

using json = nlohmann::ordered_json;

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

double parse_double(const std::string& s) {
    if (s == "nan" || s == "NaN" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw FormatError("not a number: '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& s) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || s.front() == '-') {
        throw FormatError("not an unsigned integer: '" + s + "'");
    }
    return v;
}

json nullable(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double from_nullable(const json& v) {
    if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!v.is_number()) throw FormatError("expected a number or null in results JSON");
    return v.get<double>();
}

}  // namespace

ResultRow ResultRow::from_run(CellKey key, const RunResult& r, std::uint64_t seed, std::string config_hash) {
    ResultRow row;
    row.key = std::move(key);
    row.ami = r.ami;
    row.nmi = r.nmi;
    row.ari = r.ari;
    row.sil_orig = r.silhouette_original;
    row.sil_reduced = r.silhouette_reduced;
    row.n_clusters = r.n_clusters;
    row.clustered_fraction = r.clustered_fraction;
    row.wall_time = r.wall_time;
    row.seed = seed;
    row.config_hash = std::move(config_hash);
    return row;
}

ResultRow ResultRow::failed(CellKey key, std::uint64_t seed, std::string config_hash) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    ResultRow row;
    row.key = std::move(key);
    row.ami = row.nmi = row.ari = row.sil_orig = row.sil_reduced = row.clustered_fraction = nan;
    row.n_clusters = 0;
    row.wall_time = 0.0;
    row.seed = seed;
    row.config_hash = std::move(config_hash);
    return row;
}

bool operator==(const ResultRow& a, const ResultRow& b) {
    return a.key == b.key && same(a.ami, b.ami) && same(a.nmi, b.nmi) && same(a.ari, b.ari) &&
           same(a.sil_orig, b.sil_orig) && same(a.sil_reduced, b.sil_reduced) && a.n_clusters == b.n_clusters &&
           same(a.clustered_fraction, b.clustered_fraction) && same(a.wall_time, b.wall_time) && a.seed == b.seed &&
           a.config_hash == b.config_hash;
}

void ResultsTable::add(ResultRow row) {
    if (row.config_hash.empty()) throw ValidationError("results row without a config hash");
    if (index_.count(row.key)) {
        throw ValidationError("duplicate results cell (" + row.key.encoder + ", " + row.key.dataset + ", " +
                              row.key.clusterer + ")");
    }
    index_.emplace(row.key, rows_.size());
    rows_.push_back(std::move(row));
}

const ResultRow* ResultsTable::find(const CellKey& key) const {
    const auto it = index_.find(key);
    return it == index_.end() ? nullptr : &rows_[it->second];
}

const std::vector<std::string>& results_columns() {
    static const std::vector<std::string> cols{"encoder",     "dataset",    "clusterer",         "ami",
                                               "nmi",         "ari",        "sil_orig",          "sil_reduced",
                                               "n_clusters",  "clustered_fraction", "wall_time", "seed",
                                               "config_hash"};
    return cols;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                record.push_back(std::move(field));
                records.push_back(std::move(record));
            }
            field.clear();
            record.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw FormatError("unterminated quoted CSV field");
    if (any || !field.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    return records;
}

std::string to_csv(const ResultsTable& table) {
    std::ostringstream out;
    const auto& cols = results_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
    for (const auto& r : table.rows()) {
        out << csv_field(r.key.encoder) << ',' << csv_field(r.key.dataset) << ',' << csv_field(r.key.clusterer) << ','
            << format_double(r.ami) << ',' << format_double(r.nmi) << ',' << format_double(r.ari) << ','
            << format_double(r.sil_orig) << ',' << format_double(r.sil_reduced) << ',' << r.n_clusters << ','
            << format_double(r.clustered_fraction) << ',' << format_double(r.wall_time) << ',' << r.seed << ','
            << csv_field(r.config_hash) << "\n";
    }
    return out.str();
}

ResultsTable results_from_csv(const std::string& text) {
    const auto records = parse_csv(text);
    if (records.empty() || records.front() != results_columns()) {
        throw FormatError("results CSV header does not match the expected columns");
    }
    ResultsTable table;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& f = records[i];
        if (f.size() != results_columns().size()) {
            throw FormatError("results CSV line " + std::to_string(i + 1) + " has " + std::to_string(f.size()) +
                              " fields");
        }
        ResultRow r;
        r.key = {f[0], f[1], f[2]};
        r.ami = parse_double(f[3]);
        r.nmi = parse_double(f[4]);
        r.ari = parse_double(f[5]);
        r.sil_orig = parse_double(f[6]);
        r.sil_reduced = parse_double(f[7]);
        r.n_clusters = parse_u64(f[8]);
        r.clustered_fraction = parse_double(f[9]);
        r.wall_time = parse_double(f[10]);
        r.seed = parse_u64(f[11]);
        r.config_hash = f[12];
        table.add(std::move(r));
    }
    return table;
}

nlohmann::ordered_json to_json(const ResultsTable& table) {
    json rows = json::array();
    for (const auto& r : table.rows()) {
        rows.push_back(json{{"encoder", r.key.encoder},
                            {"dataset", r.key.dataset},
                            {"clusterer", r.key.clusterer},
                            {"ami", nullable(r.ami)},
                            {"nmi", nullable(r.nmi)},
                            {"ari", nullable(r.ari)},
                            {"sil_orig", nullable(r.sil_orig)},
                            {"sil_reduced", nullable(r.sil_reduced)},
                            {"n_clusters", r.n_clusters},
                            {"clustered_fraction", nullable(r.clustered_fraction)},
                            {"wall_time", nullable(r.wall_time)},
                            {"seed", r.seed},
                            {"config_hash", r.config_hash}});
    }
    return rows;
}

ResultsTable results_from_json(const nlohmann::ordered_json& j) {
    if (!j.is_array()) throw FormatError("results JSON must be an array of rows");
    ResultsTable table;
    try {
        for (const auto& o : j) {
            ResultRow r;
            r.key = {o.at("encoder").get<std::string>(), o.at("dataset").get<std::string>(),
                     o.at("clusterer").get<std::string>()};
            r.ami = from_nullable(o.at("ami"));
            r.nmi = from_nullable(o.at("nmi"));
            r.ari = from_nullable(o.at("ari"));
            r.sil_orig = from_nullable(o.at("sil_orig"));
            r.sil_reduced = from_nullable(o.at("sil_reduced"));
            r.n_clusters = o.at("n_clusters").get<std::size_t>();
            r.clustered_fraction = from_nullable(o.at("clustered_fraction"));
            r.wall_time = from_nullable(o.at("wall_time"));
            r.seed = o.at("seed").get<std::uint64_t>();
            r.config_hash = o.at("config_hash").get<std::string>();
            table.add(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed results JSON: ") + e.what());
    }
    return table;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_results(const ResultsTable& table, const std::filesystem::path& stem) {
    auto with_ext = [&](const std::string& ext) {
        auto p = stem;
        p += ext;
        return p;
    };
    write_text(with_ext(".csv"), to_csv(table));
    write_text(with_ext(".json"), to_json(table).dump(2) + "\n");
    if (!table.failures().empty()) {
        json failures = json::array();
        for (const auto& f : table.failures()) {
            failures.push_back(json{{"encoder", f.key.encoder},
                                    {"dataset", f.key.dataset},
                                    {"clusterer", f.key.clusterer},
                                    {"error", f.message}});
        }
        write_text(with_ext(".failures.json"), failures.dump(2) + "\n");
    }
}

ResultsTable read_results(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    if (path.extension() == ".json") {
        try {
            return results_from_json(json::parse(text));
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(std::string("malformed results JSON: ") + e.what());
        }
    }
    return results_from_csv(text);
}

}  // namespace zsclust
