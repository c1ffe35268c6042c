#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "acdc/rng.hpp"
#include "acdc/tokenizer.hpp"

using namespace acdc;

namespace {

// small geometry keeps the brute-force oracles cheap
const PatchGeometry kGeom(8, 8, 4, 4);  // 4 patches of dim 16

Vec random_frame(Rng& rng, const PatchGeometry& geom) {
    Vec f(geom.frame_dim());
    for (auto& v : f) v = rng.uniform();
    return f;
}

Vec frame_from_patches(const PatchGeometry& geom, const std::vector<Vec>& patches) {
    Vec f(geom.frame_dim(), 0.0);
    for (int p = 0; p < geom.n_patches(); ++p) geom.place_patch(f, p, patches[p]);
    return f;
}

}  // namespace

TEST_SUITE("patch geometry") {
    TEST_CASE("tiling is validated") {
        CHECK_THROWS_AS(PatchGeometry(16, 16, 5, 4), std::invalid_argument);
        CHECK_NOTHROW(PatchGeometry(16, 16, 4, 4));
    }

    TEST_CASE("extract and place are inverse") {
        Rng rng(41);
        Vec f = random_frame(rng, kGeom);
        Vec rebuilt(kGeom.frame_dim(), 0.0);
        for (int p = 0; p < kGeom.n_patches(); ++p)
            kGeom.place_patch(rebuilt, p, kGeom.extract_patch(f, p));
        CHECK(rebuilt == f);
    }
}

TEST_SUITE("codebook fit") {
    TEST_CASE("separable clusters are recovered exactly") {
        // corpus of exactly K distinct patches, each repeated in several frames
        Rng rng(43);
        const int k = 4;
        std::vector<Vec> protos;
        for (int i = 0; i < k; ++i) {
            Vec p(kGeom.patch_dim());
            for (auto& v : p) v = i + 0.1 * rng.uniform();
            protos.push_back(p);
        }
        std::vector<Vec> frames;
        for (int rep = 0; rep < 5; ++rep)
            frames.push_back(frame_from_patches(kGeom, {protos[0], protos[1], protos[2], protos[3]}));
        Codebook cb = Codebook::fit(frames, kGeom, k, 10, 7);
        std::set<Vec> got(cb.codewords().begin(), cb.codewords().end());
        std::set<Vec> want(protos.begin(), protos.end());
        CHECK(got == want);
        CHECK(cb.quantization_error(frames) == 0.0);
    }

    TEST_CASE("zero iterations returns the seeded initialization") {
        Rng rng(47);
        std::vector<Vec> frames;
        for (int i = 0; i < 20; ++i) frames.push_back(random_frame(rng, kGeom));
        Codebook a = Codebook::fit(frames, kGeom, 8, 0, 123);
        Codebook b = Codebook::fit(frames, kGeom, 8, 0, 123);
        CHECK(a.codewords() == b.codewords());
        // initialization picks actual corpus patches
        std::set<Vec> corpus_patches;
        for (const auto& f : frames)
            for (int p = 0; p < kGeom.n_patches(); ++p)
                corpus_patches.insert(kGeom.extract_patch(f, p));
        for (const auto& cw : a.codewords()) CHECK(corpus_patches.count(cw) == 1);
    }

    TEST_CASE("refinement never increases quantization error") {
        Rng rng(53);
        std::vector<Vec> frames;
        for (int i = 0; i < 30; ++i) frames.push_back(random_frame(rng, kGeom));
        double prev = Codebook::fit(frames, kGeom, 8, 1, 5).quantization_error(frames);
        for (int iters : {2, 5, 10, 25, 50}) {
            double err = Codebook::fit(frames, kGeom, 8, iters, 5).quantization_error(frames);
            CHECK(err <= prev + 1e-12);
            prev = err;
        }
    }

    TEST_CASE("too few distinct patches is an error") {
        std::vector<Vec> frames(3, Vec(kGeom.frame_dim(), 0.5));  // one distinct patch
        CHECK_THROWS_AS(Codebook::fit(frames, kGeom, 4, 5, 1), std::invalid_argument);
    }
}

TEST_SUITE("encode decode") {
    TEST_CASE("codeword-built frames round trip exactly") {
        Rng rng(59);
        std::vector<Vec> frames;
        for (int i = 0; i < 10; ++i) frames.push_back(random_frame(rng, kGeom));
        Codebook cb = Codebook::fit(frames, kGeom, 6, 10, 3);
        TokenChunk chunk = {3, 0, 5, 1};
        Vec frame = cb.decode(chunk);
        CHECK(cb.encode(frame) == chunk);
    }

    TEST_CASE("encode-decode-encode is idempotent on random frames") {
        Rng rng(61);
        std::vector<Vec> frames;
        for (int i = 0; i < 30; ++i) frames.push_back(random_frame(rng, kGeom));
        Codebook cb = Codebook::fit(frames, kGeom, 12, 15, 9);
        for (int i = 0; i < 100; ++i) {
            Vec x = random_frame(rng, kGeom);
            TokenChunk first = cb.encode(x);
            TokenChunk second = cb.encode(cb.decode(first));
            CHECK(second == first);
        }
    }

    TEST_CASE("decode of all-index-zero chunk tiles the first codeword") {
        Rng rng(67);
        std::vector<Vec> frames;
        for (int i = 0; i < 10; ++i) frames.push_back(random_frame(rng, kGeom));
        Codebook cb = Codebook::fit(frames, kGeom, 5, 10, 11);
        Vec frame = cb.decode({0, 0, 0, 0});
        for (int p = 0; p < kGeom.n_patches(); ++p)
            CHECK(kGeom.extract_patch(frame, p) == cb.codewords()[0]);
    }

    TEST_CASE("out-of-range token is rejected") {
        Rng rng(71);
        std::vector<Vec> frames;
        for (int i = 0; i < 10; ++i) frames.push_back(random_frame(rng, kGeom));
        Codebook cb = Codebook::fit(frames, kGeom, 5, 5, 13);
        CHECK_THROWS_AS(cb.decode({0, 1, 5, 0}), std::invalid_argument);
        CHECK_THROWS_AS(cb.encode(Vec(10, 0.0)), std::invalid_argument);
    }

    TEST_CASE("sub-half-margin perturbations keep the token") {
        Rng rng(73);
        std::vector<Vec> frames;
        for (int i = 0; i < 30; ++i) frames.push_back(random_frame(rng, kGeom));
        Codebook cb = Codebook::fit(frames, kGeom, 8, 10, 17);
        for (int trial = 0; trial < 50; ++trial) {
            Vec x = random_frame(rng, kGeom);
            TokenChunk chunk = cb.encode(x);
            for (int p = 0; p < kGeom.n_patches(); ++p) {
                Vec patch = kGeom.extract_patch(x, p);
                // brute-force margin: distance gap to the second-nearest codeword
                double d1 = 1e300, d2 = 1e300;
                for (const auto& cw : cb.codewords()) {
                    double d = l2_distance(patch, cw);
                    if (d < d1) {
                        d2 = d1;
                        d1 = d;
                    } else if (d < d2) {
                        d2 = d;
                    }
                }
                double margin = d2 - d1;
                if (margin <= 1e-9) continue;
                Vec dir = rng.normal_vec(kGeom.patch_dim());
                double n = norm2(dir);
                for (auto& v : dir) v *= 0.49 * margin / n;
                Vec shifted = patch;
                axpy(1.0, dir, shifted);
                CHECK(cb.nearest_codeword(shifted) == chunk[p]);
            }
        }
    }

    TEST_CASE("reconstruction error is bounded by per-patch nearest distances") {
        Rng rng(79);
        std::vector<Vec> frames;
        for (int i = 0; i < 30; ++i) frames.push_back(random_frame(rng, kGeom));
        Codebook cb = Codebook::fit(frames, kGeom, 8, 10, 19);
        for (int trial = 0; trial < 20; ++trial) {
            Vec x = random_frame(rng, kGeom);
            double bound_sq = 0.0;
            for (int p = 0; p < kGeom.n_patches(); ++p) {
                Vec patch = kGeom.extract_patch(x, p);
                double d1 = 1e300;
                for (const auto& cw : cb.codewords()) d1 = std::min(d1, l2_distance(patch, cw));
                bound_sq += d1 * d1;
            }
            double err = l2_distance(cb.decode(cb.encode(x)), x);
            CHECK(err <= std::sqrt(bound_sq) + 1e-12);
        }
    }
}

TEST_SUITE("codebook io") {
    TEST_CASE("save and load round trip exactly") {
        Rng rng(83);
        std::vector<Vec> frames;
        for (int i = 0; i < 10; ++i) frames.push_back(random_frame(rng, kGeom));
        Codebook cb = Codebook::fit(frames, kGeom, 6, 10, 23);
        std::stringstream ss;
        cb.save(ss);
        Codebook back = Codebook::load(ss);
        CHECK(back.codewords() == cb.codewords());
        CHECK(back.geometry() == cb.geometry());
    }
}
