#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "acdc/pipeline.hpp"
#include "acdc/prior.hpp"
#include "acdc/story.hpp"
#include "acdc/tokenizer.hpp"

namespace acdc {

// one story tokenized through the shared codebook
struct TokenizedCorpus {
    std::vector<std::uint64_t> seeds;
    std::vector<std::vector<ConditionRecord>> conditions;  // raw prompt records
    std::vector<std::vector<TokenChunk>> chunks;

    std::size_t size() const { return chunks.size(); }
    std::vector<ChunkSequence> sequences() const;
};

TokenizedCorpus tokenize_corpus(const std::vector<Story>& corpus, const Codebook& cb);

// The decoded corpus: the ground-truth manifold every metric and prior works
// against, with causally refined per-frame conditions.
struct ReferenceSet {
    std::vector<Vec> frames;
    std::vector<ConditionRecord> conditions;
    std::vector<std::vector<Vec>> story_frames;
    std::vector<std::vector<ConditionRecord>> story_conditions;  // refined
};

ReferenceSet build_reference(const TokenizedCorpus& tokens, const Codebook& cb);

// Corpus-fitted model bundle shared by the CLI, the tests and the acceptance
// suite: codebook, chunk model, reference manifold and the mixture prior.
struct DeskModels {
    Codebook codebook;
    ChunkSequenceModel arm;
    TokenizedCorpus tokens;
    ReferenceSet reference;
    std::shared_ptr<FramePrior> prior;

    PipelineModels pipeline_models(const Schedule& s) const;
};

inline constexpr int kArmOrder = 2;
inline constexpr double kArmSmoothing = 1e-6;

DeskModels build_desk_models(const std::vector<Story>& corpus, const PatchGeometry& geom,
                             int codebook_k, int kmeans_iters, double prior_sigma,
                             std::uint64_t seed);

// same, reusing an existing codebook (the CLI fits one codebook over both corpora)
DeskModels build_desk_models(const std::vector<Story>& corpus, Codebook codebook,
                             double prior_sigma);

// sequence-aware prior over stacked frame windows for video block correction
std::shared_ptr<FramePrior> build_window_prior(const ReferenceSet& reference, int window,
                                               double sigma);

VideoModels video_models(const DeskModels& models, const FramePrior& window_prior,
                         const Schedule& s);

// deterministic per-story run seeds shared by paired experiment cells
std::uint64_t story_run_seed(std::uint64_t master_seed, int story_index);
std::uint64_t video_run_seed(std::uint64_t master_seed, int clip_index);

struct AblationCell {
    int correct_first_m = 0;  // CorrectionConfig::kCorrectAll for "all"
    bool memory = true;
};

struct AblationRow {
    AblationCell cell;
    double mean_consistency = 0.0;
    double mean_distance = 0.0;
    std::vector<double> frame_distance_curve;  // mean manifold distance per frame
};

// Paired seeded runs per grid cell: every cell replays the same per-story
// seeds, so cells differ only through the correction pathway.
std::vector<AblationRow> run_ablation(const std::vector<AblationCell>& grid,
                                      const std::vector<std::vector<ConditionRecord>>& stories,
                                      const PipelineModels& models, const CorrectionConfig& base,
                                      const SamplerConfig& sampler, double rho, const Schedule& s,
                                      const std::vector<Vec>& reference, std::uint64_t seed,
                                      int jobs = 1);

std::string ablation_csv(const std::vector<AblationRow>& rows);

// chunked deterministic parallel loop; results must be written to
// pre-allocated per-index slots by fn
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace acdc
