#pragma once

#include <vector>

#include "acdc/vecmath.hpp"

namespace acdc {

struct FrameConsistency {
    std::vector<double> pairwise;  // cosine between consecutive mean-centered frames
    double mean = 0.0;
};

// Cosine similarity of consecutive frames after per-frame mean centering, so
// a global brightness offset cannot move the metric. Needs at least 2 frames.
FrameConsistency frame_consistency(const std::vector<Vec>& frames);

// Exact nearest-neighbor L2 distance from a frame to the reference corpus —
// the quality proxy of this artifact.
double manifold_distance(const Vec& frame, const std::vector<Vec>& reference);

}  // namespace acdc
