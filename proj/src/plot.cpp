#include "vesselpipe/plot.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <stdexcept>

namespace vesselpipe {
namespace {

constexpr int kPanel = 400;
constexpr int kMargin = 50;
constexpr double kAxisMin = 0.5;
constexpr double kAxisMax = 1.0;

// Maps (recall, precision) into panel pixel coordinates; clips to the
// axis range and reports whether clipping happened.
cv::Point to_pixel(double recall, double precision, int panel_x0, bool* clipped) {
    if (recall < kAxisMin || precision < kAxisMin) *clipped = true;
    const double rx = std::clamp(recall, kAxisMin, kAxisMax);
    const double py = std::clamp(precision, kAxisMin, kAxisMax);
    const int x = panel_x0 + static_cast<int>((rx - kAxisMin) / (kAxisMax - kAxisMin) * kPanel);
    const int y = kMargin + kPanel -
                  static_cast<int>((py - kAxisMin) / (kAxisMax - kAxisMin) * kPanel);
    return {x, y};
}

void draw_panel(cv::Mat& canvas, int panel_x0, const std::string& title) {
    cv::rectangle(canvas, {panel_x0, kMargin}, {panel_x0 + kPanel, kMargin + kPanel},
                  cv::Scalar(0, 0, 0), 1);
    cv::putText(canvas, title, {panel_x0 + kPanel / 2 - 50, kMargin - 15},
                cv::FONT_HERSHEY_SIMPLEX, 0.5, cv::Scalar(0, 0, 0), 1);
    cv::putText(canvas, "recall", {panel_x0 + kPanel / 2 - 25, kMargin + kPanel + 30},
                cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(0, 0, 0), 1);
    for (int i = 0; i <= 5; ++i) {
        const double v = kAxisMin + i * (kAxisMax - kAxisMin) / 5.0;
        char label[16];
        std::snprintf(label, sizeof(label), "%.1f", v);
        const int x = panel_x0 + i * kPanel / 5;
        const int y = kMargin + kPanel - i * kPanel / 5;
        cv::putText(canvas, label, {x - 10, kMargin + kPanel + 15}, cv::FONT_HERSHEY_SIMPLEX,
                    0.35, cv::Scalar(0, 0, 0), 1);
        cv::putText(canvas, label, {panel_x0 - 30, y + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.35,
                    cv::Scalar(0, 0, 0), 1);
    }
}

}  // namespace

int pr_trajectory_plot(const TrainTrace& trace, const std::string& out_path) {
    if (trace.records.empty()) throw std::invalid_argument("pr_trajectory_plot: empty trace");

    const int width = 2 * kPanel + 3 * kMargin;
    const int height = kPanel + 2 * kMargin + 20;
    cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));

    const int train_x0 = kMargin;
    const int val_x0 = 2 * kMargin + kPanel;
    draw_panel(canvas, train_x0, "training");
    draw_panel(canvas, val_x0, "validation");

    const size_t n = trace.records.size();
    int clipped = 0;
    for (size_t i = 0; i < n; ++i) {
        const auto& rec = trace.records[i];
        // Later epochs are lighter.
        const double t = n == 1 ? 1.0 : static_cast<double>(i) / (n - 1);
        const cv::Scalar color(200.0 * t + 30, 120.0 * t + 20, 160.0 - 130.0 * t);
        bool clip = false;
        cv::circle(canvas, to_pixel(rec.train_recall, rec.train_precision, train_x0, &clip), 3,
                   color, cv::FILLED);
        cv::circle(canvas, to_pixel(rec.val_recall, rec.val_precision, val_x0, &clip), 3, color,
                   cv::FILLED);
        if (clip) ++clipped;
    }

    if (!cv::imwrite(out_path, canvas))
        throw std::runtime_error("pr_trajectory_plot: cannot write " + out_path);
    return clipped;
}

}  // namespace vesselpipe
