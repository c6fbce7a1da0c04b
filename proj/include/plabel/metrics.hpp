#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace plabel {

struct ReliabilityRow {
    double bin_lo = 0.0;
    double bin_hi = 0.0;
    double mean_confidence = 0.0;     // mean score in the bin (0 when empty)
    double empirical_accuracy = 0.0;  // positive rate in the bin (0 when empty)
    std::size_t count = 0;
};

struct MetricsReport {
    double accuracy = 0.0;
    std::optional<double> auc;  // empty when only one class is present
    double ece = 0.0;
    double hl_statistic = 0.0;
    std::size_t n = 0;
    std::vector<ReliabilityRow> reliability_rows;
};

/// Fraction of instances where (score >= threshold) matches the label.
double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

/// Mann-Whitney AUC: P(score of a random positive > random negative), ties
/// counting one half. Computed from mid-ranks after sorting.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Equal-width bins over confidence max(s, 1 - s) in [0.5, 1]; the prediction
/// is class 1 when s >= 0.5. Empty bins contribute nothing.
double expected_calibration_error(std::span<const double> scores, std::span<const int> labels,
                                  std::size_t bins = 10);

/// Hosmer-Lemeshow statistic over `groups` score-sorted groups of near-equal
/// size (remainder instances go to the earliest groups). Ties in score are
/// ordered by label so the result does not depend on input order. The mean
/// score in each denominator is clamped to [1e-6, 1 - 1e-6].
double hosmer_lemeshow(std::span<const double> scores, std::span<const int> labels, std::size_t groups = 10);

/// Equal-width bins of the raw score over [0, 1]; one row per bin.
std::vector<ReliabilityRow> reliability_table(std::span<const double> scores, std::span<const int> labels,
                                              std::size_t bins = 10);

MetricsReport evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                              std::size_t ece_bins = 10, std::size_t hl_groups = 10);

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

struct BoundaryGrid {
    Range x;
    Range y;
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<double> scores;  // row-major, ny rows of nx columns; row r has y = y.lo + r * dy

    double x_at(std::size_t col) const;
    double y_at(std::size_t row) const;
    double at(std::size_t row, std::size_t col) const { return scores[row * nx + col]; }
};

using ScoreFunction = std::function<double(std::span<const double>)>;

/// Evaluates the model on an nx-by-ny lattice including both range endpoints.
/// Only two-input models are supported.
BoundaryGrid decision_boundary_grid(const ScoreFunction& model, std::size_t input_dim, Range x_range,
                                    Range y_range, std::size_t nx, std::size_t ny);

nlohmann::json to_json(const MetricsReport& report);
std::string metrics_csv(const MetricsReport& report);       // header accuracy,auc,ece,hl,n + one row
std::string reliability_csv(std::span<const ReliabilityRow> rows);
std::string boundary_csv(const BoundaryGrid& grid);         // x,y,score

}  // namespace plabel
