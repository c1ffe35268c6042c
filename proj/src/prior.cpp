#include "acdc/prior.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace acdc {

FramePrior::FramePrior(std::vector<Vec> frames, std::vector<ConditionRecord> frame_conditions,
                       double sigma)
    : frames_(std::move(frames)), conditions_(std::move(frame_conditions)), sigma_(sigma) {
    require(!frames_.empty(), "frame prior needs at least one reference frame");
    require(frames_.size() == conditions_.size(), "frame prior: frames/conditions mismatch");
    require(sigma_ > 0.0, "frame prior: sigma must be positive");
    dim_ = frames_.front().size();
    for (const auto& f : frames_) require(f.size() == dim_, "frame prior: ragged frames");
}

std::shared_ptr<const std::vector<int>> FramePrior::matching(const ConditionRecord& cond) const {
    std::array<int, 3> key = {cond.character.value_or(-1), cond.background.value_or(-1),
                              cond.motion.value_or(-1)};
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    auto subset = std::make_shared<std::vector<int>>();
    for (std::size_t j = 0; j < conditions_.size(); ++j) {
        const auto& fc = conditions_[j];
        if (cond.character && fc.character != cond.character) continue;
        if (cond.background && fc.background != cond.background) continue;
        if (cond.motion && fc.motion != cond.motion) continue;
        subset->push_back(static_cast<int>(j));
    }
    if (subset->empty()) {
        subset->resize(frames_.size());
        for (std::size_t j = 0; j < frames_.size(); ++j) (*subset)[j] = static_cast<int>(j);
    }
    auto shared = std::shared_ptr<const std::vector<int>>(subset);
    cache_.emplace(key, shared);
    return shared;
}

Vec FramePrior::score(const Vec& x, const ConditionRecord& cond, double t,
                      const Schedule& s) const {
    require(x.size() == dim_, "frame prior score: dimension mismatch");
    auto subset = matching(cond);
    double ab = s.alpha_bar(t);
    double sab = std::sqrt(ab);
    double v = ab * sigma_ * sigma_ + (1.0 - ab);

    // responsibilities of the equal-weight diffused components (log-sum-exp)
    std::vector<double> sq(subset->size());
    double min_sq = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < subset->size(); ++k) {
        const Vec& m = frames_[(*subset)[k]];
        double acc = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            double d = x[i] - sab * m[i];
            acc += d * d;
        }
        sq[k] = acc;
        min_sq = std::min(min_sq, acc);
    }
    double z = 0.0;
    Vec out(dim_, 0.0);
    for (std::size_t k = 0; k < subset->size(); ++k) {
        double r = std::exp(-(sq[k] - min_sq) / (2.0 * v));
        if (r == 0.0) continue;
        z += r;
        const Vec& m = frames_[(*subset)[k]];
        for (std::size_t i = 0; i < dim_; ++i) out[i] += r * (sab * m[i] - x[i]);
    }
    double inv = 1.0 / (z * v);
    for (auto& o : out) o *= inv;
    return out;
}

CondScoreFn FramePrior::cond_score_fn(const Schedule& s) const {
    return [this, s](const Vec& x, const ConditionRecord& cond, double t) {
        return score(x, cond, t, s);
    };
}

ScoreFn FramePrior::uncond_score_fn(const Schedule& s) const {
    return [this, s](const Vec& x, double t) { return score(x, ConditionRecord{}, t, s); };
}

std::vector<Vec> stack_windows(const std::vector<Vec>& frames, int window) {
    require(window >= 1, "stack_windows: window must be positive");
    std::vector<Vec> out;
    if (static_cast<int>(frames.size()) < window) return out;
    std::size_t d = frames.front().size();
    for (std::size_t start = 0; start + window <= frames.size(); ++start) {
        Vec w(window * d);
        for (int j = 0; j < window; ++j)
            std::copy(frames[start + j].begin(), frames[start + j].end(), w.begin() + j * d);
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace acdc
