#include "acdc/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace acdc {

namespace {

// stream tags; one sub-stream per (purpose, frame index)
constexpr std::uint64_t kArmStream = 0xa1;
constexpr std::uint64_t kCorruptStream = 0xc2;
constexpr std::uint64_t kCorrectStream = 0xd3;

void corrupt_tokens(TokenChunk& chunk, double rho, int vocab, Rng& rng) {
    if (rho <= 0.0) return;
    for (auto& t : chunk)
        if (rng.uniform() < rho) t = rng.uniform_int(vocab);
}

ScoreFn bind_guided(const CondScoreFn& cond_score, const ScoreFn& uncond_score,
                    const ConditionRecord& cond, double guidance) {
    ScoreFn bound = [&cond_score, cond](const Vec& x, double t) { return cond_score(x, cond, t); };
    if (guidance == 1.0 || !uncond_score) return bound;
    return guided_score(std::move(bound), uncond_score, guidance);
}

}  // namespace

std::vector<Vec> PipelineRunLog::final_frames() const {
    std::vector<Vec> out;
    out.reserve(frames.size());
    for (const auto& r : frames) out.push_back(r.final_frame());
    return out;
}

Vec correct_frame(const Vec& x0, const ConditionRecord& cond, const CondScoreFn& cond_score,
                  const ScoreFn& uncond_score, const CorrectionConfig& cc, const Schedule& s,
                  Rng& rng) {
    require(all_finite(x0), "correct_frame: non-finite input state");
    check_unit_time(cc.t_prime);
    if (cc.t_prime == 0.0) return x0;
    ScoreFn score = bind_guided(cond_score, uncond_score, cond, cc.guidance);
    Vec x_t = perturb(x0, cc.t_prime, s, rng);
    return integrate_reverse(std::move(x_t), cc.t_prime, 0.0, score, cc.solver, s, rng);
}

PipelineRunLog generate_story(const std::vector<ConditionRecord>& conditions,
                              const PipelineModels& models, const CorrectionConfig& cc,
                              const SamplerConfig& sampler, double rho, const Schedule& s,
                              std::uint64_t seed) {
    require(!conditions.empty(), "generate_story: need at least one frame condition");
    require(models.arm && models.codebook, "generate_story: models missing");

    PipelineRunLog log;
    log.seed = seed;
    log.corruption = rho;
    std::vector<TokenChunk> history;
    std::vector<ConditionRecord> seen_conditions;

    for (std::size_t i = 0; i < conditions.size(); ++i) {
        seen_conditions.push_back(conditions[i]);
        FrameRecord rec;
        rec.condition = conditions[i];

        Rng arm_rng(mix_seed(seed, kArmStream, i));
        rec.raw_tokens = models.arm->sample_chunk(history, conditions[i], sampler, arm_rng);

        Rng corrupt_rng(mix_seed(seed, kCorruptStream, i));
        corrupt_tokens(rec.raw_tokens, rho, models.arm->vocab(), corrupt_rng);

        rec.decoded = models.codebook->decode(rec.raw_tokens);
        rec.refined = cc.memory_enabled ? refine(seen_conditions, cc.refiner) : conditions[i];

        history.push_back(rec.raw_tokens);
        if (cc.corrects_frame(static_cast<int>(i))) {
            Rng correct_rng(mix_seed(seed, kCorrectStream, i));
            rec.corrected_frame = correct_frame(rec.decoded, rec.refined, models.cond_score,
                                                models.uncond_score, cc, s, correct_rng);
            rec.reencoded = models.codebook->encode(rec.corrected_frame);
            rec.corrected = true;
            history = swap_history(history, {rec.reencoded}, i);
        }
        log.frames.push_back(std::move(rec));
    }
    return log;
}

PipelineRunLog generate_video(const ConditionRecord& prompt, const VideoConfig& vc,
                              const VideoModels& models, const CorrectionConfig& cc,
                              const SamplerConfig& sampler, double rho, const Schedule& s,
                              std::uint64_t seed) {
    require(vc.n_frames >= 1, "generate_video: need at least one frame");
    require(vc.window >= 1 && vc.window <= vc.n_frames,
            "generate_video: window must satisfy 0 < L <= N");
    require(models.arm && models.codebook, "generate_video: models missing");

    PipelineRunLog log;
    log.seed = seed;
    log.corruption = rho;
    std::vector<TokenChunk> history;
    const int frame_dim = models.codebook->geometry().frame_dim();

    auto sample_frame = [&](int i) {
        FrameRecord rec;
        rec.condition = prompt;
        rec.refined = prompt;
        Rng arm_rng(mix_seed(seed, kArmStream, i));
        rec.raw_tokens = models.arm->sample_chunk(history, prompt, sampler, arm_rng);
        Rng corrupt_rng(mix_seed(seed, kCorruptStream, i));
        corrupt_tokens(rec.raw_tokens, rho, models.arm->vocab(), corrupt_rng);
        rec.decoded = models.codebook->decode(rec.raw_tokens);
        history.push_back(rec.raw_tokens);
        log.frames.push_back(std::move(rec));
    };

    for (int i = 0; i < vc.window; ++i) sample_frame(i);

    if (vc.t_prime > 0.0) {
        // stack the window into one state and correct it jointly
        Vec block(static_cast<std::size_t>(vc.window) * frame_dim);
        for (int j = 0; j < vc.window; ++j)
            std::copy(log.frames[j].decoded.begin(), log.frames[j].decoded.end(),
                      block.begin() + static_cast<std::size_t>(j) * frame_dim);
        CorrectionConfig block_cc = cc;
        block_cc.t_prime = vc.t_prime;
        Rng correct_rng(mix_seed(seed, kCorrectStream, 0));
        Vec corrected = correct_frame(block, prompt, models.block_cond_score,
                                      models.block_uncond_score, block_cc, s, correct_rng);
        std::vector<TokenChunk> reencoded(vc.window);
        for (int j = 0; j < vc.window; ++j) {
            Vec frame(corrected.begin() + static_cast<std::size_t>(j) * frame_dim,
                      corrected.begin() + static_cast<std::size_t>(j + 1) * frame_dim);
            reencoded[j] = models.codebook->encode(frame);
            log.frames[j].corrected = true;
            log.frames[j].corrected_frame = std::move(frame);
            log.frames[j].reencoded = reencoded[j];
        }
        history = swap_history(history, reencoded, 0);
    }

    for (int i = vc.window; i < vc.n_frames; ++i) sample_frame(i);
    return log;
}

Vec inpaint_correct(const Vec& x0, const std::vector<bool>& keep, const ConditionRecord& cond,
                    const CondScoreFn& cond_score, const ScoreFn& uncond_score,
                    const CorrectionConfig& cc, const Schedule& s, Rng& rng) {
    require(keep.size() == x0.size(), "inpaint_correct: mask dimension mismatch");
    check_unit_time(cc.t_prime);
    if (cc.t_prime == 0.0) return x0;
    ScoreFn score = bind_guided(cond_score, uncond_score, cond, cc.guidance);
    Vec x_t = perturb(x0, cc.t_prime, s, rng);
    auto replace_kept = [&](Vec& x, double t_now) {
        double ab = s.alpha_bar(t_now);
        double a = std::sqrt(ab);
        double b = std::sqrt(1.0 - ab);
        for (std::size_t i = 0; i < keep.size(); ++i)
            if (keep[i]) x[i] = a * x0[i] + b * rng.normal();
    };
    return integrate_reverse(std::move(x_t), cc.t_prime, 0.0, score, cc.solver, s, rng,
                             replace_kept);
}

}  // namespace acdc
