#include "vesselpipe/eval.hpp"

#include <fstream>
#include <stdexcept>

namespace vesselpipe {

ConfusionCounts confusion(const ByteRaster& pred, const ByteRaster& gt, const ByteRaster& fov) {
    if (!pred.same_shape(gt) || !pred.same_shape(fov))
        throw std::invalid_argument("confusion: raster dimensions differ");
    ConfusionCounts c;
    for (int r = 0; r < pred.rows(); ++r) {
        for (int x = 0; x < pred.cols(); ++x) {
            if (!fov(r, x)) continue;
            const bool p = pred(r, x) != 0;
            const bool a = gt(r, x) != 0;
            if (p && a) ++c.tp;
            else if (p && !a) ++c.fp;
            else if (!p && a) ++c.fn;
            else ++c.tn;
        }
    }
    return c;
}

MetricsReport dataset_metrics(const std::vector<std::pair<std::string, ConfusionCounts>>& rows) {
    if (rows.empty()) throw std::invalid_argument("dataset_metrics: no rows");

    MetricsReport report;
    double sum_p = 0.0, sum_r = 0.0, sum_a = 0.0;
    for (const auto& [id, c] : rows) {
        ImageMetrics m;
        m.id = id;
        if (c.tp + c.fp > 0) {
            m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
        } else {
            m.no_positive_predictions = true;  // kept in the mean at 0
        }
        m.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn)
                                   : 0.0;
        m.accuracy = c.total() > 0
                         ? static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total())
                         : 0.0;
        sum_p += m.precision;
        sum_r += m.recall;
        sum_a += m.accuracy;
        report.rows.push_back(std::move(m));
    }
    const double n = static_cast<double>(rows.size());
    report.mean_precision = sum_p / n;
    report.mean_recall = sum_r / n;
    report.mean_accuracy = sum_a / n;
    const double s = report.mean_precision + report.mean_recall;
    report.f1 = s == 0.0 ? 0.0 : 2.0 * report.mean_precision * report.mean_recall / s;
    return report;
}

void write_metrics_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "id,precision,recall,accuracy,no_positive_predictions\n";
    for (const auto& m : report.rows)
        out << m.id << ',' << m.precision << ',' << m.recall << ',' << m.accuracy << ','
            << (m.no_positive_predictions ? 1 : 0) << '\n';
    out << "mean," << report.mean_precision << ',' << report.mean_recall << ','
        << report.mean_accuracy << ",\n";
    out << "f1," << report.f1 << ",,,\n";
}

ClassWeights estimate_class_weights(const std::vector<FundusSample>& training) {
    std::int64_t vessel = 0, background = 0;
    for (const auto& s : training) {
        if (!s.has_gt())
            throw std::invalid_argument("estimate_class_weights: sample without gt: " + s.id);
        const ByteRaster& fov = s.fov();
        for (int r = 0; r < s.gt->rows(); ++r) {
            for (int c = 0; c < s.gt->cols(); ++c) {
                if (!fov(r, c)) continue;
                if ((*s.gt)(r, c)) ++vessel;
                else ++background;
            }
        }
    }
    if (vessel == 0) throw std::runtime_error("estimate_class_weights: no vessel pixels");
    return ClassWeights{1.0, static_cast<double>(background) / static_cast<double>(vessel)};
}

}  // namespace vesselpipe
