#include "zsclust/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "zsclust/errors.hpp"
#include "zsclust/metrics.hpp"

namespace zsclust {
namespace {

using EncDataset = std::pair<std::string, std::string>;

// Clusterer -> AMI per (encoder, dataset), in first-seen order of cells.
struct CellIndex {
    std::vector<EncDataset> cells;
    std::map<EncDataset, std::vector<const ResultRow*>> rows;
    std::vector<std::string> clusterers;
};

CellIndex index_cells(const ResultsTable& table) {
    CellIndex idx;
    std::set<std::string> seen;
    for (const auto& r : table.rows()) {
        const EncDataset key{r.key.encoder, r.key.dataset};
        auto [it, inserted] = idx.rows.try_emplace(key);
        if (inserted) idx.cells.push_back(key);
        it->second.push_back(&r);
        if (seen.insert(r.key.clusterer).second) idx.clusterers.push_back(r.key.clusterer);
    }
    return idx;
}

bool excluded(const std::vector<ClustererExclusion>& exclusions, const ResultRow& r) {
    return std::any_of(exclusions.begin(), exclusions.end(), [&](const ClustererExclusion& e) {
        return e.clusterer == r.key.clusterer && (!e.dataset || *e.dataset == r.key.dataset);
    });
}

// AMI of one clusterer, or of the mean over clusterers, for a cell.
std::optional<double> cell_ami(const ResultsTable& table, const std::string& encoder, const std::string& dataset,
                               const std::string& clusterer, const std::vector<MeanRow>& means) {
    if (clusterer == "mean") {
        for (const auto& m : means) {
            if (m.encoder == encoder && m.dataset == dataset) return m.mean_ami;
        }
        return std::nullopt;
    }
    const ResultRow* r = table.find({encoder, dataset, clusterer});
    if (r == nullptr || std::isnan(r->ami)) return std::nullopt;
    return r->ami;
}

std::vector<std::string> encoders_of(const ResultsTable& table) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& r : table.rows()) {
        if (seen.insert(r.key.encoder).second) out.push_back(r.key.encoder);
    }
    return out;
}

std::vector<MeanRow> means_or_empty(const ResultsTable& table) {
    try {
        return mean_over_clusterers(table);
    } catch (const ConfigError&) {
        return {};
    }
}

}  // namespace

double mean_ami(std::span<const double> values) {
    if (values.empty()) throw ConfigError("mean over clusterers needs at least one value");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::vector<MeanRow> mean_over_clusterers(const ResultsTable& table, const std::vector<ClustererExclusion>& exclusions) {
    const CellIndex idx = index_cells(table);
    std::vector<MeanRow> out;
    for (const auto& cell : idx.cells) {
        std::vector<double> values;
        for (const ResultRow* r : idx.rows.at(cell)) {
            if (!excluded(exclusions, *r) && !std::isnan(r->ami)) values.push_back(r->ami);
        }
        if (values.empty()) {
            throw ConfigError("no clusterer left to average for (" + cell.first + ", " + cell.second + ")");
        }
        out.push_back({cell.first, cell.second, mean_ami(values), values.size()});
    }
    return out;
}

MeanStderr mean_and_stderr(std::span<const double> values) {
    if (values.empty()) throw ConfigError("mean and standard error need at least one value");
    MeanStderr m;
    m.n = values.size();
    m.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(m.n);
    if (m.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - m.mean) * (v - m.mean);
        m.std_error = std::sqrt(ss / static_cast<double>(m.n - 1)) / std::sqrt(static_cast<double>(m.n));
    }
    return m;
}

std::vector<DeltaRow> delta_vs_baseline(const ResultsTable& table, const std::string& baseline_encoder,
                                        const std::vector<DatasetGroup>& groups) {
    const CellIndex idx = index_cells(table);
    const std::vector<MeanRow> means = means_or_empty(table);
    std::vector<std::string> clusterers = idx.clusterers;
    clusterers.push_back("mean");

    std::vector<DeltaRow> out;
    for (const auto& encoder : encoders_of(table)) {
        for (const auto& clusterer : clusterers) {
            for (const auto& group : groups) {
                std::vector<double> deltas;
                for (const auto& dataset : group.datasets) {
                    const auto mine = cell_ami(table, encoder, dataset, clusterer, means);
                    if (!mine) continue;
                    const auto base = cell_ami(table, baseline_encoder, dataset, clusterer, means);
                    if (!base) {
                        throw ValidationError("baseline '" + baseline_encoder + "' has no " + clusterer +
                                              " AMI for dataset '" + dataset + "'");
                    }
                    deltas.push_back(100.0 * (*mine - *base));
                }
                if (deltas.empty()) continue;
                const MeanStderr m = mean_and_stderr(deltas);
                out.push_back({encoder, clusterer, group.name, m.mean, m.std_error, m.n});
            }
        }
    }
    return out;
}

double background_gap_pp(double ms_ami, double mr_ami) { return 100.0 * (ms_ami - mr_ami); }

std::vector<GapRow> in9_gap(const ResultsTable& table, const std::string& ms_dataset, const std::string& mr_dataset) {
    const CellIndex idx = index_cells(table);
    const std::vector<MeanRow> means = means_or_empty(table);
    std::vector<std::string> clusterers = idx.clusterers;
    clusterers.push_back("mean");

    std::vector<GapRow> out;
    for (const auto& encoder : encoders_of(table)) {
        const bool has_ms = idx.rows.count({encoder, ms_dataset}) > 0;
        const bool has_mr = idx.rows.count({encoder, mr_dataset}) > 0;
        if (!has_ms && !has_mr) continue;
        if (has_ms != has_mr) {
            throw ValidationError("encoder '" + encoder + "' lacks the '" + (has_ms ? mr_dataset : ms_dataset) +
                                  "' variant");
        }
        for (const auto& clusterer : clusterers) {
            const auto ms = cell_ami(table, encoder, ms_dataset, clusterer, means);
            const auto mr = cell_ami(table, encoder, mr_dataset, clusterer, means);
            if (!ms && !mr) continue;
            if (!ms || !mr) {
                throw ValidationError("encoder '" + encoder + "' has only one background variant for " + clusterer);
            }
            out.push_back({encoder, clusterer, 100.0 * *ms, 100.0 * *mr, background_gap_pp(*ms, *mr)});
        }
    }
    return out;
}

RankReport rank_clusterers(const ResultsTable& table) {
    const CellIndex idx = index_cells(table);
    RankReport report;
    std::map<std::string, double> rank_sum;
    std::size_t n_cells = 0;
    for (const auto& cell : idx.cells) {
        std::vector<double> amis;
        bool complete = true;
        for (const auto& c : idx.clusterers) {
            const ResultRow* r = table.find({cell.first, cell.second, c});
            if (r == nullptr || std::isnan(r->ami)) {
                complete = false;
                break;
            }
            amis.push_back(r->ami);
        }
        if (!complete) {
            report.warnings.push_back("skipped incomplete cell (" + cell.first + ", " + cell.second + ")");
            continue;
        }
        const std::vector<double> ranks = average_ranks(amis);
        for (std::size_t i = 0; i < ranks.size(); ++i) rank_sum[idx.clusterers[i]] += ranks[i];
        ++n_cells;
    }
    if (n_cells == 0) return report;
    for (const auto& c : idx.clusterers) {
        report.rows.push_back({c, rank_sum[c] / static_cast<double>(n_cells), n_cells});
    }
    return report;
}

std::vector<CorrelationRow> ami_silhouette_correlation(const ResultsTable& table, SilhouetteSpace space) {
    const CellIndex idx = index_cells(table);
    std::vector<CorrelationRow> out;
    for (const auto& c : idx.clusterers) {
        std::vector<double> amis, sils;
        for (const auto& r : table.rows()) {
            if (r.key.clusterer != c) continue;
            const double s = space == SilhouetteSpace::Original ? r.sil_orig : r.sil_reduced;
            if (std::isnan(r.ami) || std::isnan(s)) continue;
            amis.push_back(r.ami);
            sils.push_back(s);
        }
        CorrelationRow row{c, std::nullopt, amis.size(), {}};
        try {
            row.rho = spearman_rho(amis, sils);
        } catch (const Error& e) {
            row.error = e.what();
        }
        out.push_back(std::move(row));
    }
    return out;
}

std::string means_csv(const std::vector<MeanRow>& rows) {
    std::ostringstream out;
    out << "encoder,dataset,mean_ami,n_clusterers\n";
    for (const auto& r : rows) {
        out << csv_field(r.encoder) << ',' << csv_field(r.dataset) << ',' << format_double(r.mean_ami) << ','
            << r.n_clusterers << "\n";
    }
    return out.str();
}

std::string deltas_csv(const std::vector<DeltaRow>& rows) {
    std::ostringstream out;
    out << "encoder,clusterer,group,mean_delta_pp,stderr_pp,n_datasets\n";
    for (const auto& r : rows) {
        out << csv_field(r.encoder) << ',' << csv_field(r.clusterer) << ',' << csv_field(r.group) << ','
            << format_double(r.mean_delta_pp) << ',' << format_double(r.stderr_pp) << ',' << r.n_datasets << "\n";
    }
    return out.str();
}

std::string gaps_csv(const std::vector<GapRow>& rows) {
    std::ostringstream out;
    out << "encoder,clusterer,ms_pp,mr_pp,gap_pp\n";
    for (const auto& r : rows) {
        out << csv_field(r.encoder) << ',' << csv_field(r.clusterer) << ',' << format_double(r.ms_pp) << ','
            << format_double(r.mr_pp) << ',' << format_double(r.gap_pp) << "\n";
    }
    return out.str();
}

std::string ranks_csv(const RankReport& report) {
    std::ostringstream out;
    out << "clusterer,mean_rank,n_cells\n";
    for (const auto& r : report.rows) {
        out << csv_field(r.clusterer) << ',' << format_double(r.mean_rank) << ',' << r.n_cells << "\n";
    }
    return out.str();
}

std::string correlations_csv(const std::vector<CorrelationRow>& original, const std::vector<CorrelationRow>& reduced) {
    std::ostringstream out;
    out << "clusterer,space,rho,n_points,error\n";
    const auto emit = [&](const std::vector<CorrelationRow>& rows, const char* space) {
        for (const auto& r : rows) {
            out << csv_field(r.clusterer) << ',' << space << ',' << (r.rho ? format_double(*r.rho) : "nan") << ','
                << r.n_points << ',' << csv_field(r.error) << "\n";
        }
    };
    emit(original, "original");
    emit(reduced, "reduced");
    return out.str();
}

}  // namespace zsclust
