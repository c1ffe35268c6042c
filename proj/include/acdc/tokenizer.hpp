#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "acdc/vecmath.hpp"

namespace acdc {

using TokenChunk = std::vector<int>;

struct PatchGeometry {
    int frame_h = 16;
    int frame_w = 16;
    int patch_h = 4;
    int patch_w = 4;

    PatchGeometry() = default;
    PatchGeometry(int fh, int fw, int ph, int pw);

    int grid_h() const { return frame_h / patch_h; }
    int grid_w() const { return frame_w / patch_w; }
    int n_patches() const { return grid_h() * grid_w(); }
    int patch_dim() const { return patch_h * patch_w; }
    int frame_dim() const { return frame_h * frame_w; }

    Vec extract_patch(const Vec& frame, int patch_index) const;
    void place_patch(Vec& frame, int patch_index, const Vec& patch) const;

    bool operator==(const PatchGeometry&) const = default;
};

// k-means vector quantizer over frame patches: the encode/decode pair is the
// stand-in for a VQ autoencoder. Nearest codeword in L2, ties to the lowest
// index, so encode is a deterministic total function and decode-encode is an
// exact projection.
class Codebook {
public:
    static Codebook fit(const std::vector<Vec>& frames, const PatchGeometry& geom, int k,
                        int iters, std::uint64_t seed);

    TokenChunk encode(const Vec& frame) const;
    Vec decode(const TokenChunk& chunk) const;

    int size() const { return static_cast<int>(codewords_.size()); }
    const std::vector<Vec>& codewords() const { return codewords_; }
    const PatchGeometry& geometry() const { return geom_; }

    int nearest_codeword(const Vec& patch) const;

    // mean squared patch quantization error over a frame corpus
    double quantization_error(const std::vector<Vec>& frames) const;

    void save(std::ostream& out) const;
    static Codebook load(std::istream& in);

private:
    Codebook(std::vector<Vec> codewords, PatchGeometry geom);
    std::vector<Vec> codewords_;
    PatchGeometry geom_;
};

}  // namespace acdc
