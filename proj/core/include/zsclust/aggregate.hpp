#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zsclust/results.hpp"

namespace zsclust {

/// Arithmetic mean. Throws ConfigError when `values` is empty.
double mean_ami(std::span<const double> values);

/// Drops a clusterer from the mean, either everywhere or for one dataset.
struct ClustererExclusion {
    std::string clusterer;
    std::optional<std::string> dataset;
};

struct MeanRow {
    std::string encoder;
    std::string dataset;
    double mean_ami = 0.0;
    std::size_t n_clusterers = 0;
};

/// Per (encoder, dataset) mean AMI over the included clusterers with a
/// defined AMI. Throws ConfigError when a cell is left with none.
std::vector<MeanRow> mean_over_clusterers(const ResultsTable& table,
                                          const std::vector<ClustererExclusion>& exclusions = {});

struct MeanStderr {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

/// Mean and standard error (sample sd / sqrt(n)); stderr is 0 for n = 1.
/// Throws ConfigError when `values` is empty.
MeanStderr mean_and_stderr(std::span<const double> values);

struct DatasetGroup {
    std::string name;
    std::vector<std::string> datasets;
};

struct DeltaRow {
    std::string encoder;
    std::string clusterer;  ///< "mean" for the mean over clusterers
    std::string group;
    double mean_delta_pp = 0.0;
    double stderr_pp = 0.0;
    std::size_t n_datasets = 0;
};

/// AMI(encoder) - AMI(baseline) in percentage points per dataset, averaged per
/// group. Encoders lacking a dataset skip it. Throws ValidationError when the
/// baseline lacks a cell the comparison needs.
std::vector<DeltaRow> delta_vs_baseline(const ResultsTable& table, const std::string& baseline_encoder,
                                        const std::vector<DatasetGroup>& groups);

/// (ms - mr) * 100 for AMIs given as fractions.
double background_gap_pp(double ms_ami, double mr_ami);

struct GapRow {
    std::string encoder;
    std::string clusterer;  ///< "mean" for the mean over clusterers
    double ms_pp = 0.0;
    double mr_pp = 0.0;
    double gap_pp = 0.0;
};

/// Gap between the mixed-same and mixed-random variants for every encoder
/// with either one. Throws ValidationError when an encoder has only one.
std::vector<GapRow> in9_gap(const ResultsTable& table, const std::string& ms_dataset = "in9-mixed-same",
                            const std::string& mr_dataset = "in9-mixed-rand");

struct RankRow {
    std::string clusterer;
    double mean_rank = 0.0;
    std::size_t n_cells = 0;
};

struct RankReport {
    std::vector<RankRow> rows;
    std::vector<std::string> warnings;
};

/// Ranks clusterers within every (encoder, dataset) cell (lowest AMI gets 1,
/// ties share the mean rank) and averages. Cells missing a clusterer, or with
/// an undefined AMI, are skipped with a warning.
RankReport rank_clusterers(const ResultsTable& table);

enum class SilhouetteSpace { Original, Reduced };

struct CorrelationRow {
    std::string clusterer;
    std::optional<double> rho;
    std::size_t n_points = 0;
    std::string error;  ///< set when rho is undefined
};

/// Spearman rho between AMI and silhouette over a clusterer's cells.
std::vector<CorrelationRow> ami_silhouette_correlation(const ResultsTable& table, SilhouetteSpace space);

std::string means_csv(const std::vector<MeanRow>& rows);
std::string deltas_csv(const std::vector<DeltaRow>& rows);
std::string gaps_csv(const std::vector<GapRow>& rows);
std::string ranks_csv(const RankReport& report);
std::string correlations_csv(const std::vector<CorrelationRow>& original, const std::vector<CorrelationRow>& reduced);

}  // namespace zsclust
