#include "acdc/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace acdc {

namespace {

Vec centered(const Vec& f) {
    double m = 0.0;
    for (double v : f) m += v;
    m /= static_cast<double>(f.size());
    Vec out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] - m;
    return out;
}

}  // namespace

FrameConsistency frame_consistency(const std::vector<Vec>& frames) {
    if (frames.size() < 2)
        throw std::invalid_argument("frame_consistency: need at least two frames");
    FrameConsistency fc;
    fc.pairwise.reserve(frames.size() - 1);
    Vec prev = centered(frames[0]);
    double prev_n = norm2(prev);
    for (std::size_t i = 1; i < frames.size(); ++i) {
        Vec cur = centered(frames[i]);
        double cur_n = norm2(cur);
        double cos;
        if (prev_n == 0.0 && cur_n == 0.0) {
            cos = 1.0;  // both constant: identical up to brightness
        } else if (prev_n == 0.0 || cur_n == 0.0) {
            cos = 0.0;
        } else {
            cos = dot(prev, cur) / (prev_n * cur_n);
        }
        fc.pairwise.push_back(cos);
        prev = std::move(cur);
        prev_n = cur_n;
    }
    double s = 0.0;
    for (double c : fc.pairwise) s += c;
    fc.mean = s / static_cast<double>(fc.pairwise.size());
    return fc;
}

double manifold_distance(const Vec& frame, const std::vector<Vec>& reference) {
    if (reference.empty())
        throw std::invalid_argument("manifold_distance: empty reference set");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ref : reference) {
        double d = l2_distance(frame, ref);
        if (d < best) best = d;
    }
    return best;
}

}  // namespace acdc
