#include "acdc/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "acdc/experiment.hpp"
#include "acdc/io.hpp"
#include "acdc/memory.hpp"
#include "acdc/metrics.hpp"
#include "acdc/pipeline.hpp"
#include "acdc/prior.hpp"
#include "acdc/theory.hpp"

namespace acdc::cli {

namespace fs = std::filesystem;

namespace {

struct StaleArtifact : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string condition_line(int frame, const ConditionRecord& c) {
    std::ostringstream out;
    out << "frame=" << frame;
    if (c.character) out << " char=" << *c.character;
    if (c.background) out << " bg=" << *c.background;
    if (c.motion) out << " motion=" << *c.motion;
    return out.str();
}

std::vector<ConditionRecord> parse_conditions(const std::string& text) {
    std::vector<ConditionRecord> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ConditionRecord rec;
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            std::string key = tok.substr(0, eq);
            int value = std::atoi(tok.c_str() + eq + 1);
            if (key == "char") rec.character = value;
            else if (key == "bg") rec.background = value;
            else if (key == "motion") rec.motion = value;
        }
        out.push_back(rec);
    }
    return out;
}

// Shared snapshot discipline: the first command in a directory writes the
// effective config; later commands must be run with the same one.
std::string prepare_snapshot(const RunConfig& cfg, const fs::path& out) {
    validate_config(cfg);
    std::string snapshot = config_snapshot(cfg);
    fs::path snap_path = out / "config.snapshot.txt";
    if (fs::exists(snap_path)) {
        if (read_text_file(snap_path) != snapshot)
            throw StaleArtifact("stale artifact: run directory " + out.string() +
                                " was produced with a different configuration");
    } else {
        write_text_file(snap_path, snapshot);
    }
    return snapshot;
}

std::string run_id_of(const std::string& snapshot) { return to_hex(fnv1a(snapshot)); }

struct CorpusOnDisk {
    std::vector<Story> stories;
};

void write_corpus(const fs::path& dir, const std::vector<Story>& corpus,
                  const std::string& run_id, const PatchGeometry& geom) {
    std::ostringstream manifest;
    manifest << "acdc-corpus v1 run " << run_id << '\n';
    manifest << corpus.size() << '\n';
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const Story& story = corpus[i];
        char name[32];
        std::snprintf(name, sizeof(name), "story_%04zu", i);
        manifest << name << " seed " << story.seed << " frames " << story.frames.size() << '\n';
        fs::path sdir = dir / name;
        std::ostringstream conds;
        for (std::size_t f = 0; f < story.conditions.size(); ++f)
            conds << condition_line(static_cast<int>(f), story.conditions[f]) << '\n';
        write_text_file(sdir / "conditions.txt", conds.str());
        for (std::size_t f = 0; f < story.frames.size(); ++f) {
            char fname[32];
            std::snprintf(fname, sizeof(fname), "frame_%02zu.pgm", f);
            write_pgm(sdir / fname, story.frames[f], geom.frame_h, geom.frame_w);
        }
    }
    write_text_file(dir / "manifest.txt", manifest.str());
}

CorpusOnDisk read_corpus(const fs::path& dir, const PatchGeometry& geom) {
    fs::path manifest_path = dir / "manifest.txt";
    if (!fs::exists(manifest_path))
        throw std::runtime_error("corpus not found: " + manifest_path.string() +
                                 " (run gen-data first)");
    std::istringstream manifest(read_text_file(manifest_path));
    std::string tag, version, run_word, run_id;
    std::size_t n = 0;
    manifest >> tag >> version >> run_word >> run_id >> n;
    CorpusOnDisk corpus;
    corpus.stories.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string name, seed_word, frames_word;
        std::uint64_t seed;
        std::size_t frames;
        manifest >> name >> seed_word >> seed >> frames_word >> frames;
        Story& story = corpus.stories[i];
        story.seed = seed;
        story.conditions = parse_conditions(read_text_file(dir / name / "conditions.txt"));
        story.frames.reserve(frames);
        for (std::size_t f = 0; f < frames; ++f) {
            char fname[32];
            std::snprintf(fname, sizeof(fname), "frame_%02zu.pgm", f);
            story.frames.push_back(read_pgm(dir / name / fname));
        }
        if (story.conditions.size() != story.frames.size())
            throw std::runtime_error("corrupt corpus story " + name);
        (void)geom;
    }
    return corpus;
}

std::string tokens_to_text(const TokenizedCorpus& corpus, const std::string& run_id) {
    std::ostringstream out;
    out << "acdc-tokens v1 run " << run_id << '\n';
    out << corpus.size() << '\n';
    for (std::size_t si = 0; si < corpus.size(); ++si) {
        out << "story seed " << corpus.seeds[si] << " frames " << corpus.chunks[si].size() << '\n';
        for (std::size_t f = 0; f < corpus.chunks[si].size(); ++f) {
            const auto& c = corpus.conditions[si][f];
            out << c.character.value_or(-1) << ' ' << c.background.value_or(-1) << ' '
                << c.motion.value_or(-1) << " :";
            for (int t : corpus.chunks[si][f]) out << ' ' << t;
            out << '\n';
        }
    }
    return out.str();
}

TokenizedCorpus tokens_from_text(const std::string& text, int chunk_len) {
    std::istringstream in(text);
    std::string tag, version, run_word, run_id;
    std::size_t n = 0;
    in >> tag >> version >> run_word >> run_id >> n;
    if (tag != "acdc-tokens") throw std::runtime_error("unrecognized tokens file");
    TokenizedCorpus corpus;
    corpus.seeds.resize(n);
    corpus.conditions.resize(n);
    corpus.chunks.resize(n);
    for (std::size_t si = 0; si < n; ++si) {
        std::string story_word, seed_word, frames_word;
        std::size_t frames = 0;
        in >> story_word >> seed_word >> corpus.seeds[si] >> frames_word >> frames;
        corpus.conditions[si].resize(frames);
        corpus.chunks[si].assign(frames, TokenChunk(chunk_len));
        for (std::size_t f = 0; f < frames; ++f) {
            int ch, bg, mo;
            std::string colon;
            in >> ch >> bg >> mo >> colon;
            if (ch >= 0) corpus.conditions[si][f].character = ch;
            if (bg >= 0) corpus.conditions[si][f].background = bg;
            if (mo >= 0) corpus.conditions[si][f].motion = mo;
            for (auto& t : corpus.chunks[si][f]) in >> t;
        }
    }
    if (!in) throw std::runtime_error("truncated tokens file");
    return corpus;
}

struct MetricsRowset {
    std::string csv;     // including header
    double mean_consistency = 0.0;
    double mean_distance = 0.0;
    double mean_token_error = 0.0;
    std::vector<double> frame_distance_curve;
};

MetricsRowset collect_metrics(const std::vector<PipelineRunLog>& logs,
                              const std::vector<std::vector<TokenChunk>>& reference_chunks,
                              const std::vector<Vec>& reference_frames) {
    std::ostringstream csv;
    csv << "story,frame,seed,token_error_rate,frame_consistency,manifold_distance\n";
    MetricsRowset out;
    std::size_t n_frames = logs.empty() ? 0 : logs.front().frames.size();
    out.frame_distance_curve.assign(n_frames, 0.0);
    double consistency_acc = 0.0, distance_acc = 0.0, token_acc = 0.0;
    std::size_t row_count = 0;
    for (std::size_t si = 0; si < logs.size(); ++si) {
        const auto& log = logs[si];
        FrameConsistency fc = frame_consistency(log.final_frames());
        consistency_acc += fc.mean;
        for (std::size_t f = 0; f < log.frames.size(); ++f) {
            const auto& rec = log.frames[f];
            double token_err = 0.0;
            if (si < reference_chunks.size() && f < reference_chunks[si].size()) {
                const TokenChunk& ref = reference_chunks[si][f];
                const TokenChunk& got = rec.final_tokens();
                int mism = 0;
                for (std::size_t p = 0; p < ref.size(); ++p) mism += (got[p] != ref[p]);
                token_err = static_cast<double>(mism) / static_cast<double>(ref.size());
            }
            double dist = manifold_distance(rec.final_frame(), reference_frames);
            double cons = f == 0 ? std::numeric_limits<double>::quiet_NaN() : fc.pairwise[f - 1];
            csv << si << ',' << f << ',' << log.seed << ',' << format_double(token_err) << ','
                << format_double(cons) << ',' << format_double(dist) << '\n';
            out.frame_distance_curve[f] += dist;
            distance_acc += dist;
            token_acc += token_err;
            ++row_count;
        }
    }
    if (row_count > 0) {
        out.mean_distance = distance_acc / static_cast<double>(row_count);
        out.mean_token_error = token_acc / static_cast<double>(row_count);
        for (auto& v : out.frame_distance_curve) v /= static_cast<double>(logs.size());
    }
    if (!logs.empty()) out.mean_consistency = consistency_acc / static_cast<double>(logs.size());
    out.csv = csv.str();
    return out;
}

void write_run_outputs(const fs::path& dir, const std::vector<PipelineRunLog>& logs,
                       const MetricsRowset& metrics, const std::string& run_id,
                       const std::string& mode, const PatchGeometry& geom) {
    write_text_file(dir / "metrics.csv", metrics.csv);
    std::ostringstream summary;
    summary << "run " << run_id << '\n';
    summary << "mode " << mode << '\n';
    summary << "stories " << logs.size() << '\n';
    summary << "mean_frame_consistency " << format_double(metrics.mean_consistency) << '\n';
    summary << "mean_manifold_distance " << format_double(metrics.mean_distance) << '\n';
    summary << "mean_token_error_rate " << format_double(metrics.mean_token_error) << '\n';
    summary << "frame_distance_curve";
    for (double v : metrics.frame_distance_curve) summary << ' ' << format_double(v);
    summary << '\n';
    write_text_file(dir / "summary.txt", summary.str());

    for (std::size_t si = 0; si < logs.size(); ++si) {
        char name[32];
        std::snprintf(name, sizeof(name), "story_%04zu", si);
        fs::path sdir = dir / name;
        std::ostringstream log_text;
        log_text << "story " << si << " run " << run_id << " seed " << logs[si].seed << '\n';
        for (std::size_t f = 0; f < logs[si].frames.size(); ++f) {
            const auto& rec = logs[si].frames[f];
            log_text << "frame " << f << " cond " << rec.condition.character.value_or(-1) << ' '
                     << rec.condition.background.value_or(-1) << ' '
                     << rec.condition.motion.value_or(-1) << " refined "
                     << rec.refined.character.value_or(-1) << ' '
                     << rec.refined.background.value_or(-1) << ' '
                     << rec.refined.motion.value_or(-1) << " corrected " << rec.corrected << '\n';
            log_text << "raw";
            for (int t : rec.raw_tokens) log_text << ' ' << t;
            log_text << "\nfinal";
            for (int t : rec.final_tokens()) log_text << ' ' << t;
            log_text << '\n';
            char fname[32];
            std::snprintf(fname, sizeof(fname), "raw_%02zu.pgm", f);
            write_pgm(sdir / fname, rec.decoded, geom.frame_h, geom.frame_w);
            std::snprintf(fname, sizeof(fname), "final_%02zu.pgm", f);
            write_pgm(sdir / fname, rec.final_frame(), geom.frame_h, geom.frame_w);
        }
        write_text_file(sdir / "log.txt", log_text.str());
    }
}

}  // namespace

int cmd_gen_data(const RunConfig& cfg, const std::string& out_dir) {
    fs::path out(out_dir);
    fs::create_directories(out);
    DirectoryLock lock(out);
    std::string snapshot = prepare_snapshot(cfg, out);
    std::string run_id = run_id_of(snapshot);

    std::vector<Story> story_corpus = make_corpus(cfg.n_stories, cfg.story, cfg.seed);
    StorySpec video_spec = cfg.story;
    video_spec.n_frames = cfg.video.n_frames;
    video_spec.p_omit = 0.0;
    std::vector<Story> video_corpus = make_video_corpus(cfg.n_stories, video_spec, cfg.seed);

    write_corpus(out / "corpus" / "story", story_corpus, run_id, cfg.story.geometry);
    write_corpus(out / "corpus" / "video", video_corpus, run_id, cfg.story.geometry);
    std::cout << "gen-data: wrote " << story_corpus.size() << " story and " << video_corpus.size()
              << " video clips under " << (out / "corpus").string() << '\n';
    return kExitOk;
}

int cmd_train(const RunConfig& cfg, const std::string& out_dir) {
    fs::path out(out_dir);
    fs::create_directories(out);
    DirectoryLock lock(out);
    std::string snapshot = prepare_snapshot(cfg, out);
    std::string run_id = run_id_of(snapshot);

    CorpusOnDisk story_corpus = read_corpus(out / "corpus" / "story", cfg.story.geometry);
    CorpusOnDisk video_corpus = read_corpus(out / "corpus" / "video", cfg.story.geometry);

    // shared codebook over every frame of both corpora
    std::vector<Vec> all_frames;
    for (const auto& s : story_corpus.stories)
        all_frames.insert(all_frames.end(), s.frames.begin(), s.frames.end());
    for (const auto& s : video_corpus.stories)
        all_frames.insert(all_frames.end(), s.frames.begin(), s.frames.end());
    Codebook cb = Codebook::fit(all_frames, cfg.story.geometry, cfg.codebook_k, cfg.kmeans_iters,
                                mix_seed(cfg.seed, 0xcb));

    TokenizedCorpus story_tokens = tokenize_corpus(story_corpus.stories, cb);
    TokenizedCorpus video_tokens = tokenize_corpus(video_corpus.stories, cb);

    ChunkSequenceModel arm_story =
        ChunkSequenceModel::fit(story_tokens.sequences(), kArmOrder, kArmSmoothing, cb.size(),
                                cfg.story.geometry.n_patches());
    ChunkSequenceModel arm_video =
        ChunkSequenceModel::fit(video_tokens.sequences(), kArmOrder, kArmSmoothing, cb.size(),
                                cfg.story.geometry.n_patches());

    // conditional score network on (quantized frame, refined condition) pairs
    NetConfig net_cfg;
    net_cfg.state_dim = cfg.story.geometry.frame_dim();
    net_cfg.hidden = cfg.net_hidden;
    net_cfg.character_vocab = cfg.story.n_characters;
    net_cfg.background_vocab = cfg.story.n_backgrounds;
    net_cfg.motion_vocab = cfg.story.n_motions;
    ScoreNetwork net(net_cfg, mix_seed(cfg.seed, 0x11e7));
    ReferenceSet story_reference = build_reference(story_tokens, cb);
    std::vector<std::pair<Vec, ConditionRecord>> train_data;
    for (std::size_t i = 0; i < story_reference.frames.size(); ++i)
        train_data.emplace_back(story_reference.frames[i], story_reference.conditions[i]);
    TrainConfig tc = cfg.train;
    tc.seed = mix_seed(cfg.seed, 0x7a11);
    std::vector<double> trace;
    if (!train_data.empty()) trace = train(net, train_data, cfg.schedule, tc);

    fs::path ck = out / "checkpoints";
    fs::create_directories(ck);
    {
        std::ofstream f(ck / "codebook.txt");
        cb.save(f);
    }
    {
        std::ofstream f(ck / "arm_story.txt");
        arm_story.save(f);
    }
    {
        std::ofstream f(ck / "arm_video.txt");
        arm_video.save(f);
    }
    {
        std::ofstream f(ck / "score_net.txt");
        net.save(f);
    }
    write_text_file(ck / "tokens_story.txt", tokens_to_text(story_tokens, run_id));
    write_text_file(ck / "tokens_video.txt", tokens_to_text(video_tokens, run_id));
    std::ostringstream loss_csv;
    for (std::size_t i = 0; i < trace.size(); ++i)
        loss_csv << i << ',' << format_double(trace[i]) << '\n';
    write_text_file(ck / "train_loss.csv", loss_csv.str());
    write_text_file(ck / "hash.txt", run_id + "\n");
    std::cout << "train: codebook " << cb.size() << " codewords, " << story_tokens.size()
              << " stories tokenized, score net " << net.parameter_count() << " parameters\n";
    return kExitOk;
}

namespace {

struct LoadedModels {
    Codebook codebook;
    ChunkSequenceModel arm_story;
    ChunkSequenceModel arm_video;
    ScoreNetwork net;
    TokenizedCorpus story_tokens;
    TokenizedCorpus video_tokens;
    ReferenceSet story_reference;
    ReferenceSet video_reference;
    std::shared_ptr<FramePrior> story_prior;
    std::shared_ptr<FramePrior> video_block_prior;

    LoadedModels(Codebook cb, ChunkSequenceModel as, ChunkSequenceModel av, ScoreNetwork n)
        : codebook(std::move(cb)), arm_story(std::move(as)), arm_video(std::move(av)),
          net(std::move(n)) {}
};

LoadedModels load_models(const RunConfig& cfg, const fs::path& out, const std::string& run_id) {
    fs::path ck = out / "checkpoints";
    if (!fs::exists(ck / "hash.txt"))
        throw std::runtime_error("checkpoints not found under " + ck.string() +
                                 " (run train first)");
    std::string stored = read_text_file(ck / "hash.txt");
    if (stored.substr(0, stored.find('\n')) != run_id)
        throw StaleArtifact("stale artifact: checkpoints were trained under a different config");

    std::ifstream cb_in(ck / "codebook.txt");
    Codebook cb = Codebook::load(cb_in);
    std::ifstream as_in(ck / "arm_story.txt");
    ChunkSequenceModel arm_story = ChunkSequenceModel::load(as_in);
    std::ifstream av_in(ck / "arm_video.txt");
    ChunkSequenceModel arm_video = ChunkSequenceModel::load(av_in);
    std::ifstream net_in(ck / "score_net.txt");
    ScoreNetwork net = ScoreNetwork::load(net_in);

    LoadedModels m(std::move(cb), std::move(arm_story), std::move(arm_video), std::move(net));
    int n_patches = m.codebook.geometry().n_patches();
    m.story_tokens = tokens_from_text(read_text_file(ck / "tokens_story.txt"), n_patches);
    m.video_tokens = tokens_from_text(read_text_file(ck / "tokens_video.txt"), n_patches);
    m.story_reference = build_reference(m.story_tokens, m.codebook);
    m.video_reference = build_reference(m.video_tokens, m.codebook);
    if (!m.story_reference.frames.empty())
        m.story_prior = std::make_shared<FramePrior>(m.story_reference.frames,
                                                     m.story_reference.conditions,
                                                     cfg.prior_sigma);
    if (!m.video_reference.frames.empty())
        m.video_block_prior = build_window_prior(m.video_reference, cfg.video.window,
                                                 cfg.prior_sigma);
    return m;
}

}  // namespace

int cmd_run(const RunConfig& cfg, const std::string& out_dir, const std::string& mode) {
    if (mode != "story" && mode != "baseline" && mode != "video")
        throw ConfigError("mode", 0, "expected story, video or baseline");
    fs::path out(out_dir);
    fs::create_directories(out);
    DirectoryLock lock(out);
    std::string snapshot = prepare_snapshot(cfg, out);
    std::string run_id = run_id_of(snapshot);

    LoadedModels models = load_models(cfg, out, run_id);
    fs::path run_dir = out / "runs" / mode;

    if (mode == "video") {
        int n_eval = std::min(cfg.n_eval_stories, static_cast<int>(models.video_tokens.size()));
        VideoModels vm;
        vm.arm = &models.arm_video;
        vm.codebook = &models.codebook;
        // video block correction always uses the sequence-aware mixture prior;
        // the frame-level network does not model stacked windows
        if (n_eval > 0) {
            if (!models.video_block_prior)
                throw std::runtime_error("video prior unavailable: empty video corpus");
            vm.block_cond_score = models.video_block_prior->cond_score_fn(cfg.schedule);
            vm.block_uncond_score = models.video_block_prior->uncond_score_fn(cfg.schedule);
        }
        std::vector<PipelineRunLog> logs(n_eval);
        std::vector<std::vector<TokenChunk>> reference(n_eval);
        parallel_for(n_eval, cfg.jobs, [&](int i) {
            logs[i] = generate_video(models.video_tokens.conditions[i].front(), cfg.video, vm,
                                     cfg.correction, cfg.sampler, cfg.corruption, cfg.schedule,
                                     video_run_seed(cfg.seed, i));
            reference[i] = models.video_tokens.chunks[i];
        });
        MetricsRowset metrics = collect_metrics(logs, reference, models.video_reference.frames);
        write_run_outputs(run_dir, logs, metrics, run_id, mode, cfg.story.geometry);
        std::cout << "run video: " << n_eval << " clips, mean manifold distance "
                  << metrics.mean_distance << '\n';
        return kExitOk;
    }

    int n_eval = std::min(cfg.n_eval_stories, static_cast<int>(models.story_tokens.size()));
    PipelineModels pm;
    pm.arm = &models.arm_story;
    pm.codebook = &models.codebook;
    if (cfg.score_backend == "network") {
        pm.cond_score = models.net.cond_score_fn();
        pm.uncond_score = models.net.score_fn(ConditionRecord{}, true);
    } else if (models.story_prior) {
        pm.cond_score = models.story_prior->cond_score_fn(cfg.schedule);
        pm.uncond_score = models.story_prior->uncond_score_fn(cfg.schedule);
    } else if (n_eval > 0) {
        throw std::runtime_error("story prior unavailable: empty story corpus");
    }

    CorrectionConfig cc = cfg.correction;
    if (mode == "baseline") cc.correct_first_m = 0;
    std::vector<PipelineRunLog> logs(n_eval);
    std::vector<std::vector<TokenChunk>> reference(n_eval);
    parallel_for(n_eval, cfg.jobs, [&](int i) {
        logs[i] = generate_story(models.story_tokens.conditions[i], pm, cc, cfg.sampler,
                                 cfg.corruption, cfg.schedule, story_run_seed(cfg.seed, i));
        reference[i] = models.story_tokens.chunks[i];
    });
    MetricsRowset metrics = collect_metrics(logs, reference, models.story_reference.frames);
    write_run_outputs(run_dir, logs, metrics, run_id, mode, cfg.story.geometry);
    std::cout << "run " << mode << ": " << n_eval << " stories, mean manifold distance "
              << metrics.mean_distance << '\n';
    return kExitOk;
}

int cmd_verify_theory(const RunConfig& cfg, const std::string& out_dir) {
    fs::path out(out_dir);
    fs::create_directories(out);
    DirectoryLock lock(out);
    std::string snapshot = prepare_snapshot(cfg, out);
    std::string run_id = run_id_of(snapshot);
    fs::path dir = out / "theory";

    bool all_pass = true;
    std::ostringstream summary;
    summary << "run " << run_id << '\n';
    auto gate = [&](bool ok, const std::string& what) {
        summary << (ok ? "PASS " : "FAIL ") << what << '\n';
        all_pass = all_pass && ok;
    };
    auto info = [&](const std::string& what) { summary << "INFO " << what << '\n'; };

    const Schedule& s = cfg.schedule;
    std::vector<double> t_grid;
    for (int i = 0; i <= 10; ++i) t_grid.push_back(0.1 * i);

    // KL contraction along forward diffusion
    std::ostringstream kl_csv;
    kl_csv << "pair,dim,t,kl,std_err\n";
    Rng pair_rng(mix_seed(cfg.seed, 0x6b7a));
    bool kl_monotone = true;
    for (int pair = 0; pair < cfg.theory.kl_pairs; ++pair) {
        int dim = pair % 2 == 0 ? 1 : 2;
        auto random_gaussian = [&] {
            Vec mean(dim);
            for (auto& v : mean) v = -2.0 + 4.0 * pair_rng.uniform();
            double var = 0.3 + 1.7 * pair_rng.uniform();
            return single_gaussian(mean, var);
        };
        GaussianMixture p = random_gaussian();
        GaussianMixture q = random_gaussian();
        auto curve = kl_curve(p, q, t_grid, s, cfg.theory.mc_samples, mix_seed(cfg.seed, pair));
        for (const auto& pt : curve)
            kl_csv << pair << ',' << dim << ',' << format_double(pt.t) << ','
                   << format_double(pt.kl) << ',' << format_double(pt.std_err) << '\n';
        for (std::size_t i = 1; i < curve.size(); ++i)
            if (curve[i].kl > curve[i - 1].kl + 1e-12) kl_monotone = false;
    }
    gate(kl_monotone, "kl-contraction: closed-form curves non-increasing (" +
                          std::to_string(cfg.theory.kl_pairs) + " random pairs)");

    // unit-variance pair against the alpha_bar * dmu^2 / 2 closed form
    GaussianMixture p0 = single_gaussian({0.0}, 1.0);
    GaussianMixture q0 = single_gaussian({2.0}, 1.0);
    auto unit_curve = kl_curve(p0, q0, t_grid, s, 0, 0);
    bool unit_ok = true;
    for (const auto& pt : unit_curve) {
        double expected = s.alpha_bar(pt.t) * 2.0;
        if (std::abs(pt.kl - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
            unit_ok = false;
        kl_csv << "unit,1," << format_double(pt.t) << ',' << format_double(pt.kl) << ",0\n";
    }
    gate(unit_ok, "kl-contraction: unit-variance case matches alpha_bar * dmu^2 / 2 (rel 1e-9)");

    // MC path on a mixture pair, non-increasing within 2x standard error
    GaussianMixture pm({{0.5, {-1.0, 0.0}, 0.2}, {0.5, {1.0, 0.0}, 0.2}});
    GaussianMixture qm({{0.7, {-0.5, 0.5}, 0.3}, {0.3, {1.5, -0.5}, 0.4}});
    auto mc_curve = kl_curve(pm, qm, t_grid, s, cfg.theory.mc_samples, mix_seed(cfg.seed, 0x3c));
    bool mc_ok = true;
    for (std::size_t i = 1; i < mc_curve.size(); ++i) {
        double slack = 2.0 * std::sqrt(mc_curve[i].std_err * mc_curve[i].std_err +
                                       mc_curve[i - 1].std_err * mc_curve[i - 1].std_err);
        if (mc_curve[i].kl > mc_curve[i - 1].kl + slack) mc_ok = false;
        kl_csv << "mixture,2," << format_double(mc_curve[i].t) << ','
               << format_double(mc_curve[i].kl) << ',' << format_double(mc_curve[i].std_err)
               << '\n';
    }
    gate(mc_ok, "kl-contraction: Monte-Carlo mixture curve non-increasing within 2x std err");
    write_text_file(dir / "kl_curves.csv", kl_csv.str());

    // recovery deviation bounds on a 2D two-mode mixture
    GaussianMixture data({{0.5, {-1.0, 0.0}, 0.1}, {0.5, {1.0, 0.0}, 0.1}});
    double eta = estimate_eta(data, 100000, mix_seed(cfg.seed, 0xe7a));
    double clip_c = cfg.theory.clip_c > 0.0
                        ? cfg.theory.clip_c
                        : estimate_clip_c(data, s, 20000, mix_seed(cfg.seed, 0xc11b));
    SolverConfig solver;
    solver.n_steps = cfg.theory.solver_steps;

    auto bound_header =
        "t_prime,alpha_bar,trials,empirical,bound_alt,bound_consistent,eta,clip_c,dim,"
        "pass_alt,pass_consistent,k_lip,cond_distance,cond_term_alt_grouped,"
        "cond_term_alt_ratio,cond_term_consistent\n";
    auto bound_row_csv = [](const BoundRow& r) {
        std::ostringstream o;
        o << format_double(r.t_prime) << ',' << format_double(r.alpha_bar) << ',' << r.trials
          << ',' << format_double(r.empirical_mean_dev) << ',' << format_double(r.bound_alt)
          << ',' << format_double(r.bound_consistent) << ',' << format_double(r.eta) << ','
          << format_double(r.clip_c) << ',' << r.dim << ',' << r.pass_alt << ','
          << r.pass_consistent << ',' << format_double(r.k_lip) << ','
          << format_double(r.cond_distance) << ','
          << format_double(r.cond_term_alt_grouped) << ','
          << format_double(r.cond_term_alt_ratio) << ','
          << format_double(r.cond_term_consistent) << '\n';
        return o.str();
    };

    std::ostringstream bounds_csv;
    bounds_csv << bound_header;
    bool t2_ok = true;
    int alt_failures = 0;
    for (int i = 1; i <= 9; ++i) {
        double tp = 0.1 * i;
        BoundRow row = deviation_bound_check(data, tp, s, clip_c, eta, cfg.theory.trials, solver,
                                             mix_seed(cfg.seed, 0x72, i));
        bounds_csv << bound_row_csv(row);
        t2_ok = t2_ok && row.pass_consistent;
        alt_failures += row.pass_alt ? 0 : 1;
    }
    write_text_file(dir / "bounds.csv", bounds_csv.str());
    gate(t2_ok, "recovery-deviation: consistent-convention bound holds at every t' "
                "(zero violations)");
    info("recovery-deviation: alternative-convention bound violations: " +
         std::to_string(alt_failures) + " of 9 (informational, not gating)");

    // conditional recovery: matched vs mismatched condition, paired trials
    ConditionRecord y_true{1, 2, 0};
    ConditionRecord y_far{3, 0, 0};  // character and background differ: d = 2
    std::ostringstream cond_csv;
    cond_csv << bound_header;
    bool t3_bound_ok = true, t3_gap_ok = true;
    double k_lip = 1.0;
    for (int i = 1; i <= 9; ++i) {
        double tp = 0.1 * i;
        BoundRow matched =
            conditional_deviation_check(data, tp, s, clip_c, eta, k_lip, y_true, y_true,
                                        cfg.theory.trials, solver, mix_seed(cfg.seed, 0x73, i));
        BoundRow mism =
            conditional_deviation_check(data, tp, s, clip_c, eta, k_lip, y_true, y_far,
                                        cfg.theory.trials, solver, mix_seed(cfg.seed, 0x73, i));
        cond_csv << bound_row_csv(matched) << bound_row_csv(mism);
        t3_bound_ok = t3_bound_ok && matched.pass_consistent && mism.pass_consistent;
        if (!(mism.empirical_mean_dev > matched.empirical_mean_dev)) t3_gap_ok = false;
    }
    write_text_file(dir / "conditional.csv", cond_csv.str());
    gate(t3_bound_ok, "conditional-recovery: consistent conditional bound holds "
                      "(zero violations)");
    gate(t3_gap_ok, "conditional-recovery: mismatched condition (d=2) strictly worse than "
                    "matched (d=0)");

    summary << (all_pass ? "ALL-PASS" : "FAILED") << '\n';
    write_text_file(dir / "summary.txt", summary.str());
    std::cout << summary.str();
    return all_pass ? kExitOk : kExitAssertion;
}

int cmd_report(const std::string& out_dir) {
    fs::path out(out_dir);
    fs::path runs = out / "runs";
    std::ostringstream report;
    report << "acdc report\n";
    bool partial = false;
    if (!fs::exists(runs)) {
        std::cout << "report: warning, no runs found under " << runs.string()
                  << " (partial report)\n";
        write_text_file(out / "report" / "report.txt", "no runs\n");
        return kExitOk;
    }
    std::vector<fs::path> modes;
    for (const auto& e : fs::directory_iterator(runs))
        if (e.is_directory()) modes.push_back(e.path());
    std::sort(modes.begin(), modes.end());
    for (const auto& mode_dir : modes) {
        report << "== mode " << mode_dir.filename().string() << " ==\n";
        fs::path summary = mode_dir / "summary.txt";
        if (!fs::exists(summary)) {
            report << "(incomplete run: missing summary)\n";
            partial = true;
            continue;
        }
        report << read_text_file(summary);

        std::vector<fs::path> stories;
        for (const auto& e : fs::directory_iterator(mode_dir))
            if (e.is_directory()) stories.push_back(e.path());
        std::sort(stories.begin(), stories.end());
        for (const auto& sdir : stories) {
            // side-by-side grid: raw frames on top, corrected below (when present)
            std::vector<Vec> raw, fin;
            int h = 0, w = 0;
            for (int f = 0;; ++f) {
                char fname[32];
                std::snprintf(fname, sizeof(fname), "raw_%02d.pgm", f);
                if (!fs::exists(sdir / fname)) break;
                raw.push_back(read_pgm(sdir / fname, &h, &w));
                std::snprintf(fname, sizeof(fname), "final_%02d.pgm", f);
                fin.push_back(read_pgm(sdir / fname));
            }
            if (raw.empty()) {
                partial = true;
                continue;
            }
            bool any_corrected = false;
            std::string log_text = read_text_file(sdir / "log.txt");
            if (log_text.find("corrected 1") != std::string::npos) any_corrected = true;
            int rows = any_corrected ? 2 : 1;
            int nf = static_cast<int>(raw.size());
            Vec grid(static_cast<std::size_t>(rows) * h * nf * w, 0.0);
            for (int f = 0; f < nf; ++f)
                for (int r = 0; r < h; ++r)
                    for (int c = 0; c < w; ++c) {
                        grid[r * (nf * w) + f * w + c] = raw[f][r * w + c];
                        if (any_corrected)
                            grid[(h + r) * (nf * w) + f * w + c] = fin[f][r * w + c];
                    }
            write_pgm(out / "report" / (mode_dir.filename().string() + "_" +
                                        sdir.filename().string() + "_grid.pgm"),
                      grid, rows * h, nf * w);
        }
    }
    if (partial) {
        report << "WARNING: partial report, some runs were incomplete\n";
        std::cout << "report: warning, partial report\n";
    }
    write_text_file(out / "report" / "report.txt", report.str());
    std::cout << "report written to " << (out / "report").string() << '\n';
    return kExitOk;
}

namespace {

std::string resolve_out_dir(const std::string& flag_out, const RunConfig& cfg) {
    if (!flag_out.empty()) return flag_out;
    if (!cfg.out_dir.empty()) return cfg.out_dir;
    const char* root = std::getenv("ACDC_OUT_ROOT");
    return (root ? std::string(root) : std::string("acdc_out")) + "/run";
}

}  // namespace

int run_main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty()) {
        std::cerr << "usage: acdc <gen-data|train|run|verify-theory|report> [--config PATH]"
                     " [--seed N] [--out DIR] [--mode story|video|baseline] [--jobs N]\n";
        return kExitConfig;
    }
    std::string command = args[0];
    std::string config_path, out_flag, mode = "story";
    std::optional<std::uint64_t> seed_override;
    std::optional<int> jobs_override;
    try {
        for (std::size_t i = 1; i < args.size(); ++i) {
            auto need_value = [&](const char* flag) -> std::string {
                if (i + 1 >= args.size())
                    throw ConfigError(flag, 0, "missing value");
                return args[++i];
            };
            if (args[i] == "--config") config_path = need_value("--config");
            else if (args[i] == "--out") out_flag = need_value("--out");
            else if (args[i] == "--mode") mode = need_value("--mode");
            else if (args[i] == "--seed") {
                try {
                    seed_override = std::stoull(need_value("--seed"));
                } catch (const std::logic_error&) {
                    throw ConfigError("--seed", 0, "expected an unsigned integer");
                }
            } else if (args[i] == "--jobs") {
                try {
                    jobs_override = std::stoi(need_value("--jobs"));
                } catch (const std::logic_error&) {
                    throw ConfigError("--jobs", 0, "expected an integer");
                }
            } else throw ConfigError(args[i], 0, "unknown flag");
        }

        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config_file(config_path);
        if (seed_override) cfg.seed = *seed_override;
        if (jobs_override) cfg.jobs = *jobs_override;
        std::string out = resolve_out_dir(out_flag, cfg);
        cfg.out_dir = out;

        if (command == "gen-data") return cmd_gen_data(cfg, out);
        if (command == "train") return cmd_train(cfg, out);
        if (command == "run") return cmd_run(cfg, out, mode);
        if (command == "verify-theory") return cmd_verify_theory(cfg, out);
        if (command == "report") return cmd_report(out);
        std::cerr << "unknown command: " << command << '\n';
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace acdc::cli
