#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "acdc/condition.hpp"
#include "acdc/schedule.hpp"
#include "acdc/score.hpp"
#include "acdc/vecmath.hpp"

namespace acdc {

// Conditional kernel-mixture prior over a set of reference frames: an
// equal-weight isotropic Gaussian sits on every reference frame, and
// conditioning selects the frames whose attributes match the defined fields
// of the query condition (an unset field is a wildcard). The score of the
// VP-diffused mixture is exact, which makes this the pipeline's analytic
// alternative to a learned score network. Also used, with stacked frame
// windows, as the sequence-aware prior for video block correction.
class FramePrior {
public:
    FramePrior(std::vector<Vec> frames, std::vector<ConditionRecord> frame_conditions,
               double sigma);

    Vec score(const Vec& x, const ConditionRecord& cond, double t, const Schedule& s) const;

    CondScoreFn cond_score_fn(const Schedule& s) const;
    ScoreFn uncond_score_fn(const Schedule& s) const;

    const std::vector<Vec>& frames() const { return frames_; }
    double sigma() const { return sigma_; }

    // indices of reference frames compatible with cond; falls back to the
    // full set when nothing matches, so the score stays defined everywhere
    std::shared_ptr<const std::vector<int>> matching(const ConditionRecord& cond) const;

private:
    std::vector<Vec> frames_;
    std::vector<ConditionRecord> conditions_;
    double sigma_;
    std::size_t dim_;

    mutable std::mutex cache_mutex_;
    mutable std::map<std::array<int, 3>, std::shared_ptr<const std::vector<int>>> cache_;
};

// Stacks consecutive length-window frame runs of one story into single
// states of dimension window * frame_dim.
std::vector<Vec> stack_windows(const std::vector<Vec>& frames, int window);

}  // namespace acdc
