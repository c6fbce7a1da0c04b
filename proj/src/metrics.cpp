#include "plabel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "plabel/error.hpp"
#include "plabel/format.hpp"

namespace plabel {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ArgumentError("scores and labels differ in length");
    if (scores.empty()) throw ArgumentError("empty score list");
    for (int y : labels)
        if (y != 0 && y != 1) throw ArgumentError("labels must be 0 or 1");
    for (double s : scores)
        if (!std::isfinite(s)) throw ArgumentError("non-finite score");
}

std::size_t bin_of(double x, double lo, double hi, std::size_t bins) {
    const double t = (x - lo) / (hi - lo) * static_cast<double>(bins);
    if (!(t > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(t), bins - 1);
}

}  // namespace

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
    check_inputs(scores, labels);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) correct += (scores[i] >= threshold ? 1 : 0) == labels[i];
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    check_inputs(scores, labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // sum of mid-ranks (1-based) of the positives
    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t q = i; q < j; ++q)
            if (labels[order[q]] == 1) {
                pos_rank_sum += mid;
                ++n_pos;
            }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw UndefinedMetricError("AUC needs both classes present");
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double expected_calibration_error(std::span<const double> scores, std::span<const int> labels, std::size_t bins) {
    check_inputs(scores, labels);
    if (bins == 0) throw ArgumentError("need at least one bin");
    std::vector<double> conf_sum(bins, 0.0), correct(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double s = scores[i];
        const int predicted = s >= 0.5 ? 1 : 0;
        const double conf = predicted == 1 ? s : 1.0 - s;
        const std::size_t b = bin_of(conf, 0.5, 1.0, bins);
        conf_sum[b] += conf;
        correct[b] += predicted == labels[i] ? 1.0 : 0.0;
        ++count[b];
    }
    double ece = 0.0;
    const double n = static_cast<double>(scores.size());
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        const double c = static_cast<double>(count[b]);
        ece += (c / n) * std::abs(correct[b] / c - conf_sum[b] / c);
    }
    return ece;
}

double hosmer_lemeshow(std::span<const double> scores, std::span<const int> labels, std::size_t groups) {
    check_inputs(scores, labels);
    if (groups == 0) throw ArgumentError("need at least one group");
    const std::size_t n = scores.size();
    if (n < groups) throw ArgumentError("fewer instances than Hosmer-Lemeshow groups");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return labels[a] < labels[b];
    });

    const std::size_t base = n / groups, extra = n % groups;
    double stat = 0.0;
    std::size_t pos = 0;
    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t size = base + (g < extra ? 1 : 0);
        double score_sum = 0.0, observed = 0.0;
        for (std::size_t q = pos; q < pos + size; ++q) {
            score_sum += scores[order[q]];
            observed += labels[order[q]];
        }
        pos += size;
        const double ng = static_cast<double>(size);
        const double mean = score_sum / ng;
        const double expected = ng * mean;
        const double p = std::clamp(mean, 1e-6, 1.0 - 1e-6);
        stat += (observed - expected) * (observed - expected) / (ng * p * (1.0 - p));
    }
    return stat;
}

std::vector<ReliabilityRow> reliability_table(std::span<const double> scores, std::span<const int> labels,
                                              std::size_t bins) {
    check_inputs(scores, labels);
    if (bins == 0) throw ArgumentError("need at least one bin");
    std::vector<ReliabilityRow> rows(bins);
    std::vector<double> score_sum(bins, 0.0), pos(bins, 0.0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const std::size_t b = bin_of(scores[i], 0.0, 1.0, bins);
        score_sum[b] += scores[i];
        pos[b] += labels[i];
        ++rows[b].count;
    }
    for (std::size_t b = 0; b < bins; ++b) {
        rows[b].bin_lo = static_cast<double>(b) / static_cast<double>(bins);
        rows[b].bin_hi = static_cast<double>(b + 1) / static_cast<double>(bins);
        if (rows[b].count > 0) {
            const double c = static_cast<double>(rows[b].count);
            rows[b].mean_confidence = score_sum[b] / c;
            rows[b].empirical_accuracy = pos[b] / c;
        }
    }
    return rows;
}

MetricsReport evaluate_scores(std::span<const double> scores, std::span<const int> labels, std::size_t ece_bins,
                              std::size_t hl_groups) {
    MetricsReport r;
    r.n = scores.size();
    r.accuracy = accuracy(scores, labels);
    try {
        r.auc = roc_auc(scores, labels);
    } catch (const UndefinedMetricError&) {
        r.auc.reset();
    }
    r.ece = expected_calibration_error(scores, labels, ece_bins);
    r.hl_statistic = hosmer_lemeshow(scores, labels, std::min(hl_groups, scores.size()));
    r.reliability_rows = reliability_table(scores, labels, ece_bins);
    return r;
}

double BoundaryGrid::x_at(std::size_t col) const {
    return nx == 1 ? x.lo : x.lo + (x.hi - x.lo) * static_cast<double>(col) / static_cast<double>(nx - 1);
}

double BoundaryGrid::y_at(std::size_t row) const {
    return ny == 1 ? y.lo : y.lo + (y.hi - y.lo) * static_cast<double>(row) / static_cast<double>(ny - 1);
}

BoundaryGrid decision_boundary_grid(const ScoreFunction& model, std::size_t input_dim, Range x_range,
                                    Range y_range, std::size_t nx, std::size_t ny) {
    if (input_dim != 2) throw UnsupportedError("decision boundary grids need a 2-D model");
    if (nx == 0 || ny == 0) throw ArgumentError("grid resolution must be positive");
    if (!(x_range.hi > x_range.lo) || !(y_range.hi > y_range.lo)) throw ArgumentError("empty grid range");
    BoundaryGrid grid{x_range, y_range, nx, ny, std::vector<double>(nx * ny)};
    double point[2];
    for (std::size_t r = 0; r < ny; ++r) {
        point[1] = grid.y_at(r);
        for (std::size_t c = 0; c < nx; ++c) {
            point[0] = grid.x_at(c);
            grid.scores[r * nx + c] = model(std::span<const double>(point, 2));
        }
    }
    return grid;
}

nlohmann::json to_json(const MetricsReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.reliability_rows)
        rows.push_back({{"bin_lo", r.bin_lo},
                        {"bin_hi", r.bin_hi},
                        {"mean_confidence", r.mean_confidence},
                        {"empirical_accuracy", r.empirical_accuracy},
                        {"count", r.count}});
    return {{"accuracy", report.accuracy},
            {"auc", report.auc ? nlohmann::json(*report.auc) : nlohmann::json(nullptr)},
            {"ece", report.ece},
            {"hl", report.hl_statistic},
            {"n", report.n},
            {"reliability", std::move(rows)}};
}

std::string metrics_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << "accuracy,auc,ece,hl,n\n"
        << format_number(report.accuracy) << ',' << (report.auc ? format_number(*report.auc) : "nan") << ','
        << format_number(report.ece) << ',' << format_number(report.hl_statistic) << ',' << report.n << '\n';
    return out.str();
}

std::string reliability_csv(std::span<const ReliabilityRow> rows) {
    std::ostringstream out;
    out << "bin_lo,bin_hi,mean_confidence,empirical_accuracy,count\n";
    for (const auto& r : rows)
        out << format_number(r.bin_lo) << ',' << format_number(r.bin_hi) << ',' << format_number(r.mean_confidence)
            << ',' << format_number(r.empirical_accuracy) << ',' << r.count << '\n';
    return out.str();
}

std::string boundary_csv(const BoundaryGrid& grid) {
    std::ostringstream out;
    out << "x,y,score\n";
    for (std::size_t r = 0; r < grid.ny; ++r)
        for (std::size_t c = 0; c < grid.nx; ++c)
            out << format_number(grid.x_at(c)) << ',' << format_number(grid.y_at(r)) << ','
                << format_number(grid.at(r, c)) << '\n';
    return out.str();
}

}  // namespace plabel
