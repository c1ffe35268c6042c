#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "acdc/condition.hpp"
#include "acdc/rng.hpp"
#include "acdc/tokenizer.hpp"
#include "acdc/vecmath.hpp"

namespace acdc {

struct SamplerConfig {
    double temperature = 1.0;
    int top_k = 64;
};

struct ChunkSequence {
    std::vector<TokenChunk> chunks;
    std::vector<ConditionRecord> conditions;  // one per chunk
};

// Smoothed order-k count model over token chunks. The context of chunk i is
// the pair (hashes of the previous k chunks, condition record of chunk i);
// within a chunk, token positions are independent categoricals given that
// context. Exact conditional probabilities are available for every context,
// which is what the swap-history and sampler oracles lean on.
class ChunkSequenceModel {
public:
    static ChunkSequenceModel fit(const std::vector<ChunkSequence>& corpus, int order,
                                  double alpha_s, int vocab, int chunk_len);

    int order() const { return order_; }
    int vocab() const { return vocab_; }
    int chunk_len() const { return chunk_len_; }
    double smoothing() const { return alpha_s_; }

    // smoothed p(token | history, cond, position); sums to 1 over the vocabulary
    std::vector<double> conditional(const std::vector<TokenChunk>& history,
                                    const ConditionRecord& cond, int position) const;

    TokenChunk sample_chunk(const std::vector<TokenChunk>& history, const ConditionRecord& cond,
                            const SamplerConfig& sc, Rng& rng) const;

    void save(std::ostream& out) const;
    static ChunkSequenceModel load(std::istream& in);

private:
    struct ContextKey {
        std::vector<std::uint64_t> history;  // length == order, front-padded
        int character, background, motion;   // -1 encodes an unset attribute
        auto operator<=>(const ContextKey&) const = default;
    };
    ContextKey make_key(const std::vector<TokenChunk>& history, const ConditionRecord& cond) const;
    std::uint64_t chunk_hash_checked(const TokenChunk& chunk);
    static std::uint64_t chunk_hash(const TokenChunk& chunk);

    int order_ = 2;
    int vocab_ = 64;
    int chunk_len_ = 16;
    double alpha_s_ = 1e-6;
    // context -> sparse (position, token) -> count
    std::map<ContextKey, std::map<std::pair<int, int>, std::uint32_t>> counts_;
    std::map<std::uint64_t, TokenChunk> hash_registry_;
};

// History with [first, first + replacement.size()) replaced. The range must
// lie inside the history.
std::vector<TokenChunk> swap_history(const std::vector<TokenChunk>& history,
                                     const std::vector<TokenChunk>& replacement,
                                     std::size_t first);

// temperature then top-k truncation then renormalization, shared with tests
std::vector<double> apply_sampler_transform(std::vector<double> probs, const SamplerConfig& sc);

}  // namespace acdc
