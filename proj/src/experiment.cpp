#include "acdc/experiment.hpp"

#include <atomic>
#include <mutex>
#include <sstream>
#include <thread>

#include "acdc/io.hpp"
#include "acdc/memory.hpp"
#include "acdc/metrics.hpp"

namespace acdc {

std::vector<ChunkSequence> TokenizedCorpus::sequences() const {
    std::vector<ChunkSequence> seqs;
    seqs.reserve(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) seqs.push_back({chunks[i], conditions[i]});
    return seqs;
}

TokenizedCorpus tokenize_corpus(const std::vector<Story>& corpus, const Codebook& cb) {
    TokenizedCorpus out;
    for (const auto& story : corpus) {
        out.seeds.push_back(story.seed);
        out.conditions.push_back(story.conditions);
        std::vector<TokenChunk> chunks;
        chunks.reserve(story.frames.size());
        for (const auto& f : story.frames) chunks.push_back(cb.encode(f));
        out.chunks.push_back(std::move(chunks));
    }
    return out;
}

ReferenceSet build_reference(const TokenizedCorpus& tokens, const Codebook& cb) {
    ReferenceSet ref;
    for (std::size_t si = 0; si < tokens.size(); ++si) {
        std::vector<ConditionRecord> refined = refine_all(tokens.conditions[si]);
        std::vector<Vec> decoded;
        decoded.reserve(tokens.chunks[si].size());
        for (std::size_t f = 0; f < tokens.chunks[si].size(); ++f) {
            Vec frame = cb.decode(tokens.chunks[si][f]);
            ref.frames.push_back(frame);
            ref.conditions.push_back(refined[f]);
            decoded.push_back(std::move(frame));
        }
        ref.story_frames.push_back(std::move(decoded));
        ref.story_conditions.push_back(std::move(refined));
    }
    return ref;
}

PipelineModels DeskModels::pipeline_models(const Schedule& s) const {
    PipelineModels pm;
    pm.arm = &arm;
    pm.codebook = &codebook;
    pm.cond_score = prior->cond_score_fn(s);
    pm.uncond_score = prior->uncond_score_fn(s);
    return pm;
}

DeskModels build_desk_models(const std::vector<Story>& corpus, Codebook codebook,
                             double prior_sigma) {
    TokenizedCorpus tokens = tokenize_corpus(corpus, codebook);
    ChunkSequenceModel arm = ChunkSequenceModel::fit(tokens.sequences(), kArmOrder, kArmSmoothing,
                                                     codebook.size(),
                                                     codebook.geometry().n_patches());
    ReferenceSet reference = build_reference(tokens, codebook);
    auto prior =
        std::make_shared<FramePrior>(reference.frames, reference.conditions, prior_sigma);
    return DeskModels{std::move(codebook), std::move(arm), std::move(tokens),
                      std::move(reference), std::move(prior)};
}

DeskModels build_desk_models(const std::vector<Story>& corpus, const PatchGeometry& geom,
                             int codebook_k, int kmeans_iters, double prior_sigma,
                             std::uint64_t seed) {
    std::vector<Vec> frames;
    for (const auto& s : corpus) frames.insert(frames.end(), s.frames.begin(), s.frames.end());
    Codebook cb = Codebook::fit(frames, geom, codebook_k, kmeans_iters, mix_seed(seed, 0xcb));
    return build_desk_models(corpus, std::move(cb), prior_sigma);
}

std::shared_ptr<FramePrior> build_window_prior(const ReferenceSet& reference, int window,
                                               double sigma) {
    std::vector<Vec> windows;
    std::vector<ConditionRecord> conds;
    for (std::size_t si = 0; si < reference.story_frames.size(); ++si) {
        auto w = stack_windows(reference.story_frames[si], window);
        for (auto& win : w) {
            windows.push_back(std::move(win));
            conds.push_back(reference.story_conditions[si].front());
        }
    }
    return std::make_shared<FramePrior>(std::move(windows), std::move(conds), sigma);
}

VideoModels video_models(const DeskModels& models, const FramePrior& window_prior,
                         const Schedule& s) {
    VideoModels vm;
    vm.arm = &models.arm;
    vm.codebook = &models.codebook;
    vm.block_cond_score = window_prior.cond_score_fn(s);
    vm.block_uncond_score = window_prior.uncond_score_fn(s);
    return vm;
}

std::uint64_t story_run_seed(std::uint64_t master_seed, int story_index) {
    return mix_seed(master_seed, 0x10e5, story_index);
}

std::uint64_t video_run_seed(std::uint64_t master_seed, int clip_index) {
    return mix_seed(master_seed, 0x10e6, clip_index);
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    int n_workers = std::min(jobs, n);
    for (int w = 0; w < n_workers; ++w) {
        workers.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (error) std::rethrow_exception(error);
}

std::vector<AblationRow> run_ablation(const std::vector<AblationCell>& grid,
                                      const std::vector<std::vector<ConditionRecord>>& stories,
                                      const PipelineModels& models, const CorrectionConfig& base,
                                      const SamplerConfig& sampler, double rho, const Schedule& s,
                                      const std::vector<Vec>& reference, std::uint64_t seed,
                                      int jobs) {
    std::vector<AblationRow> rows;
    rows.reserve(grid.size());
    for (const AblationCell& cell : grid) {
        CorrectionConfig cc = base;
        cc.correct_first_m = cell.correct_first_m;
        cc.memory_enabled = cell.memory;
        AblationRow row;
        row.cell = cell;
        std::size_t n_frames = stories.empty() ? 0 : stories.front().size();
        row.frame_distance_curve.assign(n_frames, 0.0);
        std::vector<PipelineRunLog> logs(stories.size());
        parallel_for(static_cast<int>(stories.size()), jobs, [&](int i) {
            logs[i] = generate_story(stories[i], models, cc, sampler, rho, s,
                                     story_run_seed(seed, i));
        });
        for (const auto& log : logs) {
            row.mean_consistency += frame_consistency(log.final_frames()).mean;
            for (std::size_t f = 0; f < log.frames.size(); ++f) {
                double d = manifold_distance(log.frames[f].final_frame(), reference);
                row.frame_distance_curve[f] += d;
                row.mean_distance += d;
            }
        }
        if (!stories.empty()) {
            row.mean_consistency /= static_cast<double>(stories.size());
            row.mean_distance /= static_cast<double>(stories.size() * n_frames);
            for (auto& v : row.frame_distance_curve) v /= static_cast<double>(stories.size());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream out;
    out << "correct_first_m,memory,mean_frame_consistency,mean_manifold_distance";
    std::size_t n_frames = rows.empty() ? 0 : rows.front().frame_distance_curve.size();
    for (std::size_t f = 0; f < n_frames; ++f) out << ",frame_" << f << "_distance";
    out << '\n';
    for (const auto& row : rows) {
        if (row.cell.correct_first_m == CorrectionConfig::kCorrectAll) out << "all";
        else out << row.cell.correct_first_m;
        out << ',' << (row.cell.memory ? "on" : "off") << ','
            << format_double(row.mean_consistency) << ',' << format_double(row.mean_distance);
        for (double v : row.frame_distance_curve) out << ',' << format_double(v);
        out << '\n';
    }
    return out.str();
}

}  // namespace acdc
