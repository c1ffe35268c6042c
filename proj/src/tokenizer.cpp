#include "acdc/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "acdc/rng.hpp"

namespace acdc {

PatchGeometry::PatchGeometry(int fh, int fw, int ph, int pw)
    : frame_h(fh), frame_w(fw), patch_h(ph), patch_w(pw) {
    require(fh > 0 && fw > 0 && ph > 0 && pw > 0, "patch geometry must be positive");
    require(fh % ph == 0 && fw % pw == 0, "patches must tile the frame exactly");
}

Vec PatchGeometry::extract_patch(const Vec& frame, int patch_index) const {
    require(static_cast<int>(frame.size()) == frame_dim(), "extract_patch: frame size mismatch");
    int gr = patch_index / grid_w();
    int gc = patch_index % grid_w();
    Vec p(patch_dim());
    for (int r = 0; r < patch_h; ++r)
        for (int c = 0; c < patch_w; ++c)
            p[r * patch_w + c] = frame[(gr * patch_h + r) * frame_w + (gc * patch_w + c)];
    return p;
}

void PatchGeometry::place_patch(Vec& frame, int patch_index, const Vec& patch) const {
    int gr = patch_index / grid_w();
    int gc = patch_index % grid_w();
    for (int r = 0; r < patch_h; ++r)
        for (int c = 0; c < patch_w; ++c)
            frame[(gr * patch_h + r) * frame_w + (gc * patch_w + c)] = patch[r * patch_w + c];
}

Codebook::Codebook(std::vector<Vec> codewords, PatchGeometry geom)
    : codewords_(std::move(codewords)), geom_(geom) {}

namespace {

double sq_dist(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

int Codebook::nearest_codeword(const Vec& patch) const {
    int best = 0;
    double best_d = sq_dist(patch, codewords_[0]);
    for (int k = 1; k < size(); ++k) {
        double d = sq_dist(patch, codewords_[k]);
        if (d < best_d) {  // strict: ties stay on the lowest index
            best_d = d;
            best = k;
        }
    }
    return best;
}

Codebook Codebook::fit(const std::vector<Vec>& frames, const PatchGeometry& geom, int k,
                       int iters, std::uint64_t seed) {
    require(k >= 2, "codebook needs at least two codewords");
    require(iters >= 0, "iteration count must be non-negative");

    std::vector<Vec> patches;
    patches.reserve(frames.size() * geom.n_patches());
    for (const auto& f : frames)
        for (int p = 0; p < geom.n_patches(); ++p) patches.push_back(geom.extract_patch(f, p));

    // distinct patches, order of first appearance
    std::map<Vec, int> seen;
    std::vector<Vec> distinct;
    for (const auto& p : patches)
        if (seen.emplace(p, 1).second) distinct.push_back(p);
    if (static_cast<int>(distinct.size()) < k)
        throw std::invalid_argument("fewer distinct patches than codewords requested");

    // seeded initialization: k distinct patches chosen by partial shuffle
    Rng rng(mix_seed(seed, 0xc0de));
    std::vector<int> order(distinct.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    for (int i = 0; i < k; ++i) {
        int j = i + rng.uniform_int(static_cast<int>(order.size()) - i);
        std::swap(order[i], order[j]);
    }
    std::vector<Vec> centers(k);
    for (int i = 0; i < k; ++i) centers[i] = distinct[order[i]];

    std::vector<int> assign(patches.size());
    Codebook cb(centers, geom);
    for (int it = 0; it < iters; ++it) {
        for (std::size_t i = 0; i < patches.size(); ++i)
            assign[i] = cb.nearest_codeword(patches[i]);
        std::vector<Vec> sums(k, Vec(geom.patch_dim(), 0.0));
        std::vector<int> counts(k, 0);
        std::vector<int> first_member(k, -1);
        std::vector<bool> uniform(k, true);
        for (std::size_t i = 0; i < patches.size(); ++i) {
            int c = assign[i];
            counts[c]++;
            if (first_member[c] < 0) first_member[c] = static_cast<int>(i);
            else if (uniform[c] && patches[i] != patches[first_member[c]]) uniform[c] = false;
            for (int d = 0; d < geom.patch_dim(); ++d) sums[c][d] += patches[i][d];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its codeword
            if (uniform[c]) {
                // bit-exact centroid for a cluster of identical patches
                cb.codewords_[c] = patches[first_member[c]];
                continue;
            }
            for (int d = 0; d < geom.patch_dim(); ++d)
                cb.codewords_[c][d] = sums[c][d] / counts[c];
        }
    }
    return cb;
}

TokenChunk Codebook::encode(const Vec& frame) const {
    require(static_cast<int>(frame.size()) == geom_.frame_dim(), "encode: frame dimension mismatch");
    TokenChunk chunk(geom_.n_patches());
    for (int p = 0; p < geom_.n_patches(); ++p)
        chunk[p] = nearest_codeword(geom_.extract_patch(frame, p));
    return chunk;
}

Vec Codebook::decode(const TokenChunk& chunk) const {
    require(static_cast<int>(chunk.size()) == geom_.n_patches(), "decode: chunk length mismatch");
    Vec frame(geom_.frame_dim(), 0.0);
    for (int p = 0; p < geom_.n_patches(); ++p) {
        int idx = chunk[p];
        if (idx < 0 || idx >= size()) throw std::invalid_argument("decode: token index out of range");
        geom_.place_patch(frame, p, codewords_[idx]);
    }
    return frame;
}

double Codebook::quantization_error(const std::vector<Vec>& frames) const {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& f : frames) {
        for (int p = 0; p < geom_.n_patches(); ++p) {
            Vec patch = geom_.extract_patch(f, p);
            total += sq_dist(patch, codewords_[nearest_codeword(patch)]);
            ++n;
        }
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

void Codebook::save(std::ostream& out) const {
    out << "acdc-codebook v1\n";
    out << geom_.frame_h << ' ' << geom_.frame_w << ' ' << geom_.patch_h << ' ' << geom_.patch_w
        << '\n';
    out << size() << '\n';
    char buf[40];
    for (const auto& cw : codewords_) {
        for (std::size_t i = 0; i < cw.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%a", cw[i]);
            out << buf << (i + 1 == cw.size() ? '\n' : ' ');
        }
    }
}

Codebook Codebook::load(std::istream& in) {
    std::string tag, version;
    in >> tag >> version;
    if (tag != "acdc-codebook" || version != "v1")
        throw std::runtime_error("unrecognized codebook header");
    int fh, fw, ph, pw, k;
    in >> fh >> fw >> ph >> pw >> k;
    PatchGeometry geom(fh, fw, ph, pw);
    std::vector<Vec> codewords(k, Vec(geom.patch_dim()));
    for (auto& cw : codewords)
        for (auto& v : cw) {
            std::string tok;
            in >> tok;
            v = std::strtod(tok.c_str(), nullptr);
        }
    if (!in) throw std::runtime_error("truncated codebook checkpoint");
    return Codebook(std::move(codewords), geom);
}

}  // namespace acdc
