#pragma once

#include <cstdint>
#include <vector>

#include "acdc/arm.hpp"
#include "acdc/condition.hpp"
#include "acdc/memory.hpp"
#include "acdc/schedule.hpp"
#include "acdc/score.hpp"
#include "acdc/sde.hpp"
#include "acdc/tokenizer.hpp"
#include "acdc/vecmath.hpp"

namespace acdc {

struct CorrectionConfig {
    static constexpr int kCorrectAll = -1;

    double t_prime = 0.45;
    SolverConfig solver;        // defaults: deterministic Euler, 64 steps
    double guidance = 2.0;
    int correct_first_m = kCorrectAll;  // kCorrectAll or the number of leading frames
    bool memory_enabled = true;
    RefinerRules refiner;

    bool corrects_frame(int frame_index) const {
        return correct_first_m == kCorrectAll || frame_index < correct_first_m;
    }
};

struct VideoConfig {
    int n_frames = 8;   // N
    int window = 4;     // L, corrected as one block
    double t_prime = 0.5;
};

struct FrameRecord {
    TokenChunk raw_tokens;       // as sampled (after corruption injection)
    Vec decoded;
    ConditionRecord condition;   // what the ARM saw
    ConditionRecord refined;     // what the corrector saw
    bool corrected = false;
    Vec corrected_frame;         // empty unless corrected
    TokenChunk reencoded;        // empty unless corrected

    const Vec& final_frame() const { return corrected ? corrected_frame : decoded; }
    const TokenChunk& final_tokens() const { return corrected ? reencoded : raw_tokens; }
    bool operator==(const FrameRecord&) const = default;
};

struct PipelineRunLog {
    std::uint64_t seed = 0;
    double corruption = 0.0;
    std::vector<FrameRecord> frames;

    std::vector<Vec> final_frames() const;
    bool operator==(const PipelineRunLog&) const = default;
};

struct PipelineModels {
    const ChunkSequenceModel* arm = nullptr;
    const Codebook* codebook = nullptr;
    CondScoreFn cond_score;   // frame-dimensional
    ScoreFn uncond_score;     // frame-dimensional, used for guidance != 1
};

// SDEdit correction of one state: forward-perturb to t', then reverse
// PF-ODE/SDE back to 0 under the guided conditional score. t' = 0 returns x0
// untouched without consuming randomness.
Vec correct_frame(const Vec& x0, const ConditionRecord& cond, const CondScoreFn& cond_score,
                  const ScoreFn& uncond_score, const CorrectionConfig& cc, const Schedule& s,
                  Rng& rng);

// Story pipeline: per frame, ARM chunk sampling, token corruption with rate
// rho, decode, optional memory-refined SDEdit correction, re-encode, swap the
// corrected chunk into the history, continue. Randomness is split into
// per-frame per-purpose streams derived from the run seed, so disabling
// correction never shifts the ARM or corruption draws.
PipelineRunLog generate_story(const std::vector<ConditionRecord>& conditions,
                              const PipelineModels& models, const CorrectionConfig& cc,
                              const SamplerConfig& sampler, double rho, const Schedule& s,
                              std::uint64_t seed);

struct VideoModels {
    const ChunkSequenceModel* arm = nullptr;
    const Codebook* codebook = nullptr;
    CondScoreFn block_cond_score;  // dimension window * frame_dim
    ScoreFn block_uncond_score;
};

// Video pipeline: frames 1..L sampled autoregressively under one prompt,
// jointly corrected as a single stacked state, re-encoded, then frames
// L+1..N generated on top of the corrected history. No correction after L.
PipelineRunLog generate_video(const ConditionRecord& prompt, const VideoConfig& vc,
                              const VideoModels& models, const CorrectionConfig& cc,
                              const SamplerConfig& sampler, double rho, const Schedule& s,
                              std::uint64_t seed);

// Constraint-projected correction (replacement method): kept coordinates are
// reset to the forward-diffused values of x0 after every solver step, so at
// t = 0 they equal x0 exactly. keep.size() must equal the state dimension.
Vec inpaint_correct(const Vec& x0, const std::vector<bool>& keep, const ConditionRecord& cond,
                    const CondScoreFn& cond_score, const ScoreFn& uncond_score,
                    const CorrectionConfig& cc, const Schedule& s, Rng& rng);

}  // namespace acdc
