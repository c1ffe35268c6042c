#include "acdc/arm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace acdc {

namespace {
constexpr std::uint64_t kPadHash = 0x9d3f1e6b7c5a4231ull;  // virtual chunk before the sequence
}

std::uint64_t ChunkSequenceModel::chunk_hash(const TokenChunk& chunk) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over token ids
    for (int t : chunk) {
        h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(t));
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t ChunkSequenceModel::chunk_hash_checked(const TokenChunk& chunk) {
    std::uint64_t h = chunk_hash(chunk);
    auto [it, inserted] = hash_registry_.emplace(h, chunk);
    if (!inserted && it->second != chunk)
        throw std::runtime_error("chunk hash collision detected during fit");
    return h;
}

ChunkSequenceModel::ContextKey ChunkSequenceModel::make_key(
    const std::vector<TokenChunk>& history, const ConditionRecord& cond) const {
    ContextKey key;
    key.history.assign(order_, kPadHash);
    int avail = std::min<int>(order_, static_cast<int>(history.size()));
    for (int j = 0; j < avail; ++j)
        key.history[order_ - 1 - j] = chunk_hash(history[history.size() - 1 - j]);
    key.character = cond.character.value_or(-1);
    key.background = cond.background.value_or(-1);
    key.motion = cond.motion.value_or(-1);
    return key;
}

ChunkSequenceModel ChunkSequenceModel::fit(const std::vector<ChunkSequence>& corpus, int order,
                                           double alpha_s, int vocab, int chunk_len) {
    require(!corpus.empty(), "fit: empty corpus");
    require(order >= 1, "fit: order must be at least 1");
    require(alpha_s > 0.0, "fit: smoothing constant must be positive");
    ChunkSequenceModel m;
    m.order_ = order;
    m.vocab_ = vocab;
    m.chunk_len_ = chunk_len;
    m.alpha_s_ = alpha_s;
    for (const auto& seq : corpus) {
        require(seq.chunks.size() == seq.conditions.size(),
                "fit: chunks and conditions must align");
        std::vector<TokenChunk> history;
        for (std::size_t i = 0; i < seq.chunks.size(); ++i) {
            require(static_cast<int>(seq.chunks[i].size()) == chunk_len,
                    "fit: chunk length mismatch");
            for (int t : seq.chunks[i])
                require(t >= 0 && t < vocab, "fit: token outside vocabulary");
            ContextKey key = m.make_key(history, seq.conditions[i]);
            auto& table = m.counts_[key];
            for (int pos = 0; pos < chunk_len; ++pos) table[{pos, seq.chunks[i][pos]}]++;
            m.chunk_hash_checked(seq.chunks[i]);
            history.push_back(seq.chunks[i]);
        }
    }
    return m;
}

std::vector<double> ChunkSequenceModel::conditional(const std::vector<TokenChunk>& history,
                                                    const ConditionRecord& cond,
                                                    int position) const {
    require(position >= 0 && position < chunk_len_, "conditional: position out of range");
    std::vector<double> p(vocab_, alpha_s_);
    double total = alpha_s_ * vocab_;
    auto it = counts_.find(make_key(history, cond));
    if (it != counts_.end()) {
        auto lo = it->second.lower_bound({position, 0});
        auto hi = it->second.lower_bound({position + 1, 0});
        for (auto e = lo; e != hi; ++e) {
            p[e->first.second] += e->second;
            total += e->second;
        }
    }
    for (auto& v : p) v /= total;
    return p;
}

std::vector<double> apply_sampler_transform(std::vector<double> probs, const SamplerConfig& sc) {
    require(sc.top_k >= 1, "sampler: top_k must be at least 1");
    require(sc.temperature >= 0.0, "sampler: temperature must be non-negative");
    const int k = static_cast<int>(probs.size());

    constexpr double kGreedyEps = 1e-12;
    if (sc.temperature <= kGreedyEps || sc.top_k == 1) {
        int best = 0;
        for (int i = 1; i < k; ++i)
            if (probs[i] > probs[best]) best = i;  // ties stay on lowest id
        std::fill(probs.begin(), probs.end(), 0.0);
        probs[best] = 1.0;
        return probs;
    }

    if (sc.temperature != 1.0) {
        double inv_t = 1.0 / sc.temperature;
        for (auto& v : probs) v = std::pow(v, inv_t);
    }
    if (sc.top_k < k) {
        // keep the top_k most probable ids, ties resolved to lower ids
        std::vector<int> idx(k);
        for (int i = 0; i < k; ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(),
                         [&](int a, int b) { return probs[a] > probs[b]; });
        std::vector<double> kept(k, 0.0);
        for (int i = 0; i < sc.top_k; ++i) kept[idx[i]] = probs[idx[i]];
        probs = std::move(kept);
    }
    double z = 0.0;
    for (double v : probs) z += v;
    for (auto& v : probs) v /= z;
    return probs;
}

TokenChunk ChunkSequenceModel::sample_chunk(const std::vector<TokenChunk>& history,
                                            const ConditionRecord& cond, const SamplerConfig& sc,
                                            Rng& rng) const {
    TokenChunk chunk(chunk_len_);
    for (int pos = 0; pos < chunk_len_; ++pos) {
        std::vector<double> p = apply_sampler_transform(conditional(history, cond, pos), sc);
        double u = rng.uniform();
        double acc = 0.0;
        int pick = vocab_ - 1;
        for (int i = 0; i < vocab_; ++i) {
            acc += p[i];
            if (u < acc) {
                pick = i;
                break;
            }
        }
        chunk[pos] = pick;
    }
    return chunk;
}

std::vector<TokenChunk> swap_history(const std::vector<TokenChunk>& history,
                                     const std::vector<TokenChunk>& replacement,
                                     std::size_t first) {
    if (first > history.size() || first + replacement.size() > history.size())
        throw std::invalid_argument("swap_history: range outside history");
    std::vector<TokenChunk> out = history;
    for (std::size_t i = 0; i < replacement.size(); ++i) out[first + i] = replacement[i];
    return out;
}

void ChunkSequenceModel::save(std::ostream& out) const {
    out << "acdc-arm v1\n";
    out << order_ << ' ' << vocab_ << ' ' << chunk_len_ << ' ';
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", alpha_s_);
    out << buf << '\n';
    out << hash_registry_.size() << '\n';
    for (const auto& [h, chunk] : hash_registry_) {
        out << h;
        for (int t : chunk) out << ' ' << t;
        out << '\n';
    }
    out << counts_.size() << '\n';
    for (const auto& [key, table] : counts_) {
        for (std::uint64_t h : key.history) out << h << ' ';
        out << key.character << ' ' << key.background << ' ' << key.motion << ' ' << table.size()
            << '\n';
        for (const auto& [pt, c] : table)
            out << pt.first << ' ' << pt.second << ' ' << c << '\n';
    }
}

ChunkSequenceModel ChunkSequenceModel::load(std::istream& in) {
    std::string tag, version;
    in >> tag >> version;
    if (tag != "acdc-arm" || version != "v1")
        throw std::runtime_error("unrecognized sequence model header");
    ChunkSequenceModel m;
    std::string alpha_tok;
    in >> m.order_ >> m.vocab_ >> m.chunk_len_ >> alpha_tok;
    m.alpha_s_ = std::strtod(alpha_tok.c_str(), nullptr);
    std::size_t n_hashes = 0;
    in >> n_hashes;
    for (std::size_t i = 0; i < n_hashes; ++i) {
        std::uint64_t h;
        in >> h;
        TokenChunk chunk(m.chunk_len_);
        for (auto& t : chunk) in >> t;
        m.hash_registry_.emplace(h, std::move(chunk));
    }
    std::size_t n_contexts = 0;
    in >> n_contexts;
    for (std::size_t i = 0; i < n_contexts; ++i) {
        ContextKey key;
        key.history.resize(m.order_);
        for (auto& h : key.history) in >> h;
        std::size_t entries = 0;
        in >> key.character >> key.background >> key.motion >> entries;
        auto& table = m.counts_[key];
        for (std::size_t e = 0; e < entries; ++e) {
            int pos, tok;
            std::uint32_t c;
            in >> pos >> tok >> c;
            table[{pos, tok}] = c;
        }
    }
    if (!in) throw std::runtime_error("truncated sequence model checkpoint");
    return m;
}

}  // namespace acdc
