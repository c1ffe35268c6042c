#include "acdc/story.hpp"

#include <array>
#include <stdexcept>

#include "acdc/rng.hpp"

namespace acdc {

void StorySpec::validate() const {
    require(n_frames >= 1, "story spec: n_frames must be at least 1");
    require(n_characters >= 1, "story spec: character vocabulary must be non-empty");
    require(n_backgrounds >= 1, "story spec: background vocabulary must be non-empty");
    require(n_motions >= 1 && n_motions <= 9, "story spec: motion vocabulary must be 1..9");
    require(p_omit >= 0.0 && p_omit <= 1.0, "story spec: p_omit must lie in [0, 1]");
    require(geometry.frame_h >= 2 * kGlyphSize && geometry.frame_w >= 2 * kGlyphSize,
            "story spec: frame too small for the glyph");
}

std::pair<int, int> motion_displacement(int motion_id) {
    static constexpr std::array<std::pair<int, int>, 9> kTable = {{
        {0, 0},    // stay
        {0, 1},    // right
        {1, 0},    // down
        {0, -1},   // left
        {-1, 0},   // up
        {1, 1},    // down-right
        {1, -1},   // down-left
        {-1, 1},   // up-right
        {-1, -1},  // up-left
    }};
    if (motion_id < 0 || motion_id >= static_cast<int>(kTable.size()))
        throw std::invalid_argument("motion id out of range");
    return kTable[static_cast<std::size_t>(motion_id)];
}

std::vector<std::pair<int, int>> motion_positions(const std::vector<int>& motions, int start_row,
                                                  int start_col, const PatchGeometry& geom) {
    std::vector<std::pair<int, int>> pos;
    pos.reserve(motions.size());
    int r = start_row, c = start_col;
    for (std::size_t i = 0; i < motions.size(); ++i) {
        if (i > 0) {
            auto [dr, dc] = motion_displacement(motions[i]);
            r = (r + dr + geom.frame_h) % geom.frame_h;
            c = (c + dc + geom.frame_w) % geom.frame_w;
        }
        pos.emplace_back(r, c);
    }
    return pos;
}

namespace {

// All pixel values are exact multiples of 1/255 so the PGM round trip is
// lossless and the in-memory and on-disk pipelines agree bit for bit.
double level(int k) { return static_cast<double>(k) / 255.0; }

double background_pixel(int background_id, int r, int c) {
    switch (background_id) {
        case 0: return level(51);                                      // flat
        case 1: return (c % 2 == 0) ? level(102) : level(26);          // vertical stripes
        case 2: return (r % 2 == 0) ? level(102) : level(26);          // horizontal stripes
        case 3: return (((r / 2) + (c / 2)) % 2 == 0) ? level(115) : level(38);  // checker
        default: {
            // procedural texture, deterministic in the id alone
            std::uint64_t h = splitmix64(0xb6 + static_cast<std::uint64_t>(background_id));
            int a = 1 + static_cast<int>(h % 5);
            int b = 1 + static_cast<int>((h >> 8) % 5);
            int m = 2 + static_cast<int>((h >> 16) % 3);
            static constexpr int kShades[3] = {31, 79, 127};
            return level(kShades[((r * a + c * b) % m + m) % m]);
        }
    }
}

bool glyph_ink(int character_id, int r, int c) {
    // 4x4 bit patterns, row-major, bit set = ink
    static constexpr std::array<std::uint16_t, 4> kGlyphs = {
        0b1111'1111'1111'1111,  // solid block
        0b1111'1001'1001'1111,  // hollow square
        0b1001'0110'0110'1001,  // X
        0b1010'1010'1010'1010,  // vertical stripes
    };
    std::uint16_t bits;
    if (character_id < static_cast<int>(kGlyphs.size())) {
        bits = kGlyphs[static_cast<std::size_t>(character_id)];
    } else {
        std::uint64_t h = splitmix64(0x617 + static_cast<std::uint64_t>(character_id));
        bits = static_cast<std::uint16_t>(h) | static_cast<std::uint16_t>(1u << (h % 16));
    }
    return (bits >> (15 - (r * kGlyphSize + c))) & 1u;
}

}  // namespace

Vec render_frame(int character_id, int background_id, int row, int col,
                 const PatchGeometry& geom) {
    Vec frame(geom.frame_dim());
    for (int r = 0; r < geom.frame_h; ++r)
        for (int c = 0; c < geom.frame_w; ++c)
            frame[r * geom.frame_w + c] = background_pixel(background_id, r, c);
    // the glyph paints its full 4x4 box (ink 1.0, void 0.0), cyclic wrap
    for (int gr = 0; gr < kGlyphSize; ++gr)
        for (int gc = 0; gc < kGlyphSize; ++gc) {
            int r = (row + gr) % geom.frame_h;
            int c = (col + gc) % geom.frame_w;
            frame[r * geom.frame_w + c] = glyph_ink(character_id, gr, gc) ? level(255) : 0.0;
        }
    return frame;
}

std::vector<Vec> render_story_frames(const StorySpec& spec, int character_id, int background_id,
                                     const std::vector<int>& motions, int start_row,
                                     int start_col) {
    auto positions = motion_positions(motions, start_row, start_col, spec.geometry);
    std::vector<Vec> frames;
    frames.reserve(motions.size());
    for (auto [r, c] : positions)
        frames.push_back(render_frame(character_id, background_id, r, c, spec.geometry));
    return frames;
}

std::pair<int, int> story_start_position(int background_id, const PatchGeometry& geom) {
    // Patch-aligned and a function of the background alone: stories sharing a
    // background share the position chain, so the glyph position never leaks
    // the character, and every clean sampling context stays unimodal.
    std::uint64_t h = splitmix64(0x57a27 + static_cast<std::uint64_t>(background_id));
    int grid_h = geom.frame_h / kGlyphSize;
    int grid_w = geom.frame_w / kGlyphSize;
    return {kGlyphSize * static_cast<int>(h % grid_h),
            kGlyphSize * static_cast<int>((h >> 8) % grid_w)};
}

Story make_story(const StorySpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(mix_seed(seed, 0x5702));

    int character = rng.uniform_int(spec.n_characters);
    int background = rng.uniform_int(spec.n_backgrounds);
    auto [start_row, start_col] = story_start_position(background, spec.geometry);

    std::vector<int> motions(spec.n_frames, 0);
    std::vector<ConditionRecord> conditions(spec.n_frames);
    conditions[0] = ConditionRecord{character, background, 0};
    for (int i = 1; i < spec.n_frames; ++i) {
        motions[i] = rng.uniform_int(spec.n_motions);
        ConditionRecord rec;
        rec.motion = motions[i];
        if (rng.uniform() >= spec.p_omit) rec.character = character;
        if (rng.uniform() >= spec.p_omit) rec.background = background;
        conditions[i] = rec;
    }

    Story story;
    story.seed = seed;
    story.conditions = std::move(conditions);
    story.frames = render_story_frames(spec, character, background, motions, start_row, start_col);
    return story;
}

std::vector<Story> make_corpus(int n_stories, const StorySpec& spec, std::uint64_t master_seed) {
    require(n_stories >= 0, "make_corpus: story count must be non-negative");
    std::vector<Story> corpus;
    corpus.reserve(n_stories);
    for (int i = 0; i < n_stories; ++i)
        corpus.push_back(make_story(spec, mix_seed(master_seed, 0x5708, i)));
    return corpus;
}

Story make_video_story(const StorySpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(mix_seed(seed, 0x71de0));

    int character = rng.uniform_int(spec.n_characters);
    int background = rng.uniform_int(spec.n_backgrounds);
    int motion = rng.uniform_int(spec.n_motions);
    auto [start_row, start_col] = story_start_position(background, spec.geometry);

    std::vector<int> motions(spec.n_frames, motion);
    motions[0] = 0;
    Story story;
    story.seed = seed;
    story.conditions.assign(spec.n_frames, ConditionRecord{character, background, motion});
    story.frames = render_story_frames(spec, character, background, motions, start_row, start_col);
    return story;
}

std::vector<Story> make_video_corpus(int n_stories, const StorySpec& spec,
                                     std::uint64_t master_seed) {
    require(n_stories >= 0, "make_video_corpus: story count must be non-negative");
    std::vector<Story> corpus;
    corpus.reserve(n_stories);
    for (int i = 0; i < n_stories; ++i)
        corpus.push_back(make_video_story(spec, mix_seed(master_seed, 0x71d8, i)));
    return corpus;
}

}  // namespace acdc
