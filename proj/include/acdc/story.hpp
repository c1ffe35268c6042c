#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "acdc/condition.hpp"
#include "acdc/tokenizer.hpp"
#include "acdc/vecmath.hpp"

namespace acdc {

// Procedural analog of an LLM-written picture story: a glyph character moves
// over a textured background according to a per-frame motion program. The
// first frame's condition is fully specified; later frames drop persistent
// attributes with probability p_omit, which is what gives the memory module
// something to resolve.
struct StorySpec {
    int n_frames = 6;
    int n_characters = 4;
    int n_backgrounds = 4;
    int n_motions = 5;
    double p_omit = 0.7;
    PatchGeometry geometry;  // 16x16 frames, 4x4 patches

    void validate() const;
};

struct Story {
    std::uint64_t seed = 0;
    std::vector<Vec> frames;                   // rendered ground truth, values on the 1/255 grid
    std::vector<ConditionRecord> conditions;   // raw prompt analog, with omissions
};

// motion id -> per-frame displacement (d_row, d_col); ids 0..8 supported
std::pair<int, int> motion_displacement(int motion_id);

// glyph positions implied by a motion sequence (cyclic wrap), motions[0] ignored
std::vector<std::pair<int, int>> motion_positions(const std::vector<int>& motions, int start_row,
                                                  int start_col, const PatchGeometry& geom);

Vec render_frame(int character_id, int background_id, int row, int col,
                 const PatchGeometry& geom);

// fully deterministic renderer used by make_story and by the test oracles
std::vector<Vec> render_story_frames(const StorySpec& spec, int character_id, int background_id,
                                     const std::vector<int>& motions, int start_row,
                                     int start_col);

// deterministic, background-keyed, patch-aligned glyph start position
std::pair<int, int> story_start_position(int background_id, const PatchGeometry& geom);

Story make_story(const StorySpec& spec, std::uint64_t seed);

std::vector<Story> make_corpus(int n_stories, const StorySpec& spec, std::uint64_t master_seed);

// Constant-prompt clip for the autoregressive video task: one fully
// specified condition repeated over every frame, constant motion.
Story make_video_story(const StorySpec& spec, std::uint64_t seed);

std::vector<Story> make_video_corpus(int n_stories, const StorySpec& spec,
                                     std::uint64_t master_seed);

constexpr int kGlyphSize = 4;

}  // namespace acdc
