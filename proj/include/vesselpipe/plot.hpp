#pragma once

#include <string>

#include "vesselpipe/stage1.hpp"

namespace vesselpipe {

// Recall-vs-precision scatter of the training trajectory: training panel
// on the left, validation panel on the right, both axes fixed to
// [0.5, 1.0], dot brightness increasing with epoch. Values below the axis
// range are clipped onto the border; returns how many were clipped.
int pr_trajectory_plot(const TrainTrace& trace, const std::string& out_path);

}  // namespace vesselpipe
