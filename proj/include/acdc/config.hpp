#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "acdc/pipeline.hpp"
#include "acdc/schedule.hpp"
#include "acdc/score_net.hpp"
#include "acdc/story.hpp"

namespace acdc {

struct ConfigError : std::runtime_error {
    std::string field;
    int line;
    ConfigError(const std::string& field_name, int line_no, const std::string& msg)
        : std::runtime_error("config error at line " + std::to_string(line_no) + ", field '" +
                             field_name + "': " + msg),
          field(field_name),
          line(line_no) {}
};

struct TheoryConfig {
    int trials = 500;
    int mc_samples = 4000;
    double clip_c = 0.0;  // 0 = estimate as the 99th percentile of score norms
    int solver_steps = 256;
    int kl_pairs = 20;
};

// Everything a run needs, pinned. The plain-text form is `key = value` lines;
// the snapshot serializer emits every effective value (defaults included) and
// parses back to an identical config.
struct RunConfig {
    std::uint64_t seed = 12345;
    std::string out_dir;  // empty: derived from ACDC_OUT_ROOT
    int jobs = 1;

    Schedule schedule;
    CorrectionConfig correction;
    VideoConfig video;
    SamplerConfig sampler;
    TrainConfig train;
    int net_hidden = 64;
    StorySpec story;

    int n_stories = 200;
    int n_eval_stories = 100;
    double corruption = 0.05;

    int codebook_k = 64;
    int kmeans_iters = 25;
    double prior_sigma = 0.05;
    std::string score_backend = "mixture";  // mixture | network

    TheoryConfig theory;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);

// full effective-value snapshot; parse_config_text(snapshot(c)) reproduces c
std::string config_snapshot(const RunConfig& cfg);

// consistency check after parsing and after programmatic edits
void validate_config(const RunConfig& cfg);

}  // namespace acdc
