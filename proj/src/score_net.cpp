#include "acdc/score_net.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>

namespace acdc {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void time_features(double t, int frequencies, Vec& out, std::size_t offset) {
    double f = 1.0;
    for (int j = 0; j < frequencies; ++j) {
        out[offset + 2 * j] = std::sin(kTwoPi * f * t);
        out[offset + 2 * j + 1] = std::cos(kTwoPi * f * t);
        f *= 2.0;
    }
}

int embed_row(const std::optional<int>& id, int vocab) {
    if (!id.has_value()) return vocab;  // null sentinel
    require(*id >= 0 && *id < vocab, "condition id outside attribute vocabulary");
    return *id;
}

}  // namespace

void ScoreNetwork::compute_offsets() {
    const int in = cfg_.input_dim();
    const int h = cfg_.hidden;
    const int d = cfg_.state_dim;
    std::size_t o = 0;
    w1_ = o; o += static_cast<std::size_t>(h) * in;
    b1_ = o; o += h;
    w2_ = o; o += static_cast<std::size_t>(h) * h;
    b2_ = o; o += h;
    w3_ = o; o += static_cast<std::size_t>(h) * h;
    b3_ = o; o += h;
    w4_ = o; o += static_cast<std::size_t>(d) * h;
    b4_ = o; o += d;
    e_char_ = o; o += static_cast<std::size_t>(cfg_.character_vocab + 1) * cfg_.embed_dim;
    e_bg_ = o; o += static_cast<std::size_t>(cfg_.background_vocab + 1) * cfg_.embed_dim;
    e_motion_ = o; o += static_cast<std::size_t>(cfg_.motion_vocab + 1) * cfg_.embed_dim;
    params_.assign(o, 0.0);
}

ScoreNetwork::ScoreNetwork(NetConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
    require(cfg_.state_dim > 0 && cfg_.hidden > 0 && cfg_.embed_dim > 0, "bad network shape");
    compute_offsets();
    Rng rng(mix_seed(init_seed, 0x5c02e));
    auto fill_uniform = [&](std::size_t off, std::size_t n, double scale) {
        for (std::size_t i = 0; i < n; ++i) params_[off + i] = scale * (2.0 * rng.uniform() - 1.0);
    };
    const int in = cfg_.input_dim();
    const int h = cfg_.hidden;
    const int d = cfg_.state_dim;
    fill_uniform(w1_, static_cast<std::size_t>(h) * in, std::sqrt(6.0 / (in + h)));
    fill_uniform(w2_, static_cast<std::size_t>(h) * h, std::sqrt(6.0 / (h + h)));
    fill_uniform(w3_, static_cast<std::size_t>(h) * h, std::sqrt(6.0 / (h + h)));
    fill_uniform(w4_, static_cast<std::size_t>(d) * h, std::sqrt(6.0 / (h + d)));
    fill_uniform(e_char_, static_cast<std::size_t>(cfg_.character_vocab + 1) * cfg_.embed_dim, 0.1);
    fill_uniform(e_bg_, static_cast<std::size_t>(cfg_.background_vocab + 1) * cfg_.embed_dim, 0.1);
    fill_uniform(e_motion_, static_cast<std::size_t>(cfg_.motion_vocab + 1) * cfg_.embed_dim, 0.1);
}

void ScoreNetwork::forward_cached(const Vec& x, const ConditionRecord& cond, double t,
                                  Workspace& ws) const {
    require(static_cast<int>(x.size()) == cfg_.state_dim, "forward: state dimension mismatch");
    const int in = cfg_.input_dim();
    const int h = cfg_.hidden;
    const int d = cfg_.state_dim;
    const int ed = cfg_.embed_dim;

    ws.input.assign(in, 0.0);
    for (int i = 0; i < d; ++i) ws.input[i] = x[i];
    time_features(t, cfg_.time_frequencies, ws.input, d);

    ws.char_row = embed_row(cond.character, cfg_.character_vocab);
    ws.bg_row = embed_row(cond.background, cfg_.background_vocab);
    ws.motion_row = embed_row(cond.motion, cfg_.motion_vocab);
    std::size_t eoff = static_cast<std::size_t>(d) + cfg_.time_features();
    for (int i = 0; i < ed; ++i) {
        ws.input[eoff + i] = params_[e_char_ + static_cast<std::size_t>(ws.char_row) * ed + i];
        ws.input[eoff + ed + i] = params_[e_bg_ + static_cast<std::size_t>(ws.bg_row) * ed + i];
        ws.input[eoff + 2 * ed + i] =
            params_[e_motion_ + static_cast<std::size_t>(ws.motion_row) * ed + i];
    }

    auto dense = [&](std::size_t w, std::size_t b, const Vec& src, int rows, int cols, Vec& dst) {
        dst.assign(rows, 0.0);
        for (int r = 0; r < rows; ++r) {
            double acc = params_[b + r];
            const double* wr = &params_[w + static_cast<std::size_t>(r) * cols];
            for (int c = 0; c < cols; ++c) acc += wr[c] * src[c];
            dst[r] = acc;
        }
    };
    auto tanh_vec = [](const Vec& z, Vec& out) {
        out.resize(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::tanh(z[i]);
    };

    dense(w1_, b1_, ws.input, h, in, ws.z1);
    tanh_vec(ws.z1, ws.h1);
    dense(w2_, b2_, ws.h1, h, h, ws.z2);
    tanh_vec(ws.z2, ws.h2);
    dense(w3_, b3_, ws.h2, h, h, ws.z3);
    tanh_vec(ws.z3, ws.h3);
    dense(w4_, b4_, ws.h3, d, h, ws.out);
}

Vec ScoreNetwork::forward(const Vec& x, const ConditionRecord& cond, double t) const {
    Workspace ws;
    forward_cached(x, cond, t, ws);
    return ws.out;
}

void ScoreNetwork::backward(const Workspace& ws, const Vec& dout, Vec& grad) const {
    const int in = cfg_.input_dim();
    const int h = cfg_.hidden;
    const int d = cfg_.state_dim;
    const int ed = cfg_.embed_dim;
    require(grad.size() == params_.size(), "backward: gradient buffer size mismatch");

    Workspace& w = const_cast<Workspace&>(ws);  // scratch buffers only

    // output layer
    for (int r = 0; r < d; ++r) {
        grad[b4_ + r] += dout[r];
        double* gw = &grad[w4_ + static_cast<std::size_t>(r) * h];
        for (int c = 0; c < h; ++c) gw[c] += dout[r] * ws.h3[c];
    }
    w.dh.assign(h, 0.0);
    for (int r = 0; r < d; ++r) {
        const double* wr = &params_[w4_ + static_cast<std::size_t>(r) * h];
        for (int c = 0; c < h; ++c) w.dh[c] += wr[c] * dout[r];
    }

    auto hidden_back = [&](const Vec& hact, const Vec& src, std::size_t wo, std::size_t bo,
                           Vec& dz, int cols) {
        dz.resize(h);
        for (int r = 0; r < h; ++r) dz[r] = w.dh[r] * (1.0 - hact[r] * hact[r]);
        for (int r = 0; r < h; ++r) {
            grad[bo + r] += dz[r];
            double* gw = &grad[wo + static_cast<std::size_t>(r) * cols];
            for (int c = 0; c < cols; ++c) gw[c] += dz[r] * src[c];
        }
        w.dh.assign(cols, 0.0);
        for (int r = 0; r < h; ++r) {
            const double* wr = &params_[wo + static_cast<std::size_t>(r) * cols];
            for (int c = 0; c < cols; ++c) w.dh[c] += wr[c] * dz[r];
        }
    };

    hidden_back(ws.h3, ws.h2, w3_, b3_, w.dz3, h);
    hidden_back(ws.h2, ws.h1, w2_, b2_, w.dz2, h);
    hidden_back(ws.h1, ws.input, w1_, b1_, w.dz1, in);

    // w.dh now holds dLoss/dinput; route the embedding slices to their rows
    std::size_t eoff = static_cast<std::size_t>(d) + cfg_.time_features();
    for (int i = 0; i < ed; ++i) {
        grad[e_char_ + static_cast<std::size_t>(ws.char_row) * ed + i] += w.dh[eoff + i];
        grad[e_bg_ + static_cast<std::size_t>(ws.bg_row) * ed + i] += w.dh[eoff + ed + i];
        grad[e_motion_ + static_cast<std::size_t>(ws.motion_row) * ed + i] +=
            w.dh[eoff + 2 * ed + i];
    }
}

ScoreFn ScoreNetwork::score_fn(const ConditionRecord& cond, bool unconditional) const {
    ScoreNetwork copy = *this;
    ConditionRecord c = unconditional ? ConditionRecord{} : cond;
    return [copy = std::move(copy), c](const Vec& x, double t) { return copy.forward(x, c, t); };
}

CondScoreFn ScoreNetwork::cond_score_fn() const {
    ScoreNetwork copy = *this;
    return [copy = std::move(copy)](const Vec& x, const ConditionRecord& cond, double t) {
        return copy.forward(x, cond, t);
    };
}

DsmBatch make_dsm_batch(const std::vector<std::pair<Vec, ConditionRecord>>& data,
                        int batch_size, double cond_dropout, Rng& rng, double t_floor) {
    require(!data.empty(), "make_dsm_batch: empty dataset");
    require(batch_size > 0, "make_dsm_batch: batch size must be positive");
    DsmBatch batch;
    batch.samples.reserve(batch_size);
    for (int i = 0; i < batch_size; ++i) {
        const auto& [x0, cond] = data[rng.uniform_int(static_cast<int>(data.size()))];
        DsmSample s;
        s.x0 = x0;
        s.cond = cond;
        if (cond_dropout > 0.0 && rng.uniform() < cond_dropout) s.cond = ConditionRecord{};
        s.t = t_floor + (1.0 - t_floor) * rng.uniform();
        s.eps = rng.normal_vec(x0.size());
        batch.samples.push_back(std::move(s));
    }
    return batch;
}

namespace {

double lambda_weight(DsmWeighting w, double alpha_bar) {
    return w == DsmWeighting::one ? 1.0 : 1.0 - alpha_bar;
}

double batch_loss(const ScoreNetwork& net, const DsmBatch& batch, const Schedule& s,
                  DsmWeighting weighting, Vec* grad) {
    require(!batch.samples.empty(), "dsm_loss: empty batch");
    ScoreNetwork::Workspace ws;
    double loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(batch.samples.size());
    Vec dout, x_t;
    for (const auto& smp : batch.samples) {
        double ab = s.alpha_bar(smp.t);
        double sig = std::sqrt(1.0 - ab);
        double lam = lambda_weight(weighting, ab);
        x_t.resize(smp.x0.size());
        for (std::size_t i = 0; i < x_t.size(); ++i)
            x_t[i] = std::sqrt(ab) * smp.x0[i] + sig * smp.eps[i];
        net.forward_cached(x_t, smp.cond, smp.t, ws);
        // target is -eps / sigma
        double sq = 0.0;
        if (grad) dout.assign(ws.out.size(), 0.0);
        for (std::size_t i = 0; i < ws.out.size(); ++i) {
            double r = ws.out[i] + smp.eps[i] / sig;
            sq += r * r;
            if (grad) dout[i] = 2.0 * lam * r * inv_b;
        }
        loss += lam * sq * inv_b;
        if (grad) net.backward(ws, dout, *grad);
    }
    return loss;
}

}  // namespace

double dsm_loss(const ScoreNetwork& net, const DsmBatch& batch, const Schedule& s,
                DsmWeighting weighting) {
    return batch_loss(net, batch, s, weighting, nullptr);
}

double dsm_loss_grad(const ScoreNetwork& net, const DsmBatch& batch, const Schedule& s,
                     DsmWeighting weighting, Vec& grad) {
    grad.assign(net.parameter_count(), 0.0);
    return batch_loss(net, batch, s, weighting, &grad);
}

std::vector<double> train(ScoreNetwork& net,
                          const std::vector<std::pair<Vec, ConditionRecord>>& data,
                          const Schedule& s, const TrainConfig& cfg) {
    require(!data.empty(), "train: empty dataset");
    Rng rng(mix_seed(cfg.seed, 0x7a11));
    std::vector<double> trace;
    trace.reserve(cfg.steps);
    Vec grad, m(net.parameter_count(), 0.0), v(net.parameter_count(), 0.0);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    for (int step = 0; step < cfg.steps; ++step) {
        DsmBatch batch = make_dsm_batch(data, cfg.batch_size, cfg.cond_dropout, rng, cfg.t_floor);
        double loss = dsm_loss_grad(net, batch, s, cfg.weighting, grad);
        if (!std::isfinite(loss) || !all_finite(net.parameters())) throw TrainDiverged(step);
        trace.push_back(loss);
        double bc1 = 1.0 - std::pow(b1, step + 1);
        double bc2 = 1.0 - std::pow(b2, step + 1);
        Vec& p = net.mutable_parameters();
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
            v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
            p[i] -= cfg.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    }
    return trace;
}

void ScoreNetwork::save(std::ostream& out) const {
    out << "acdc-score-net v1\n";
    out << cfg_.state_dim << ' ' << cfg_.hidden << ' ' << cfg_.time_frequencies << ' '
        << cfg_.embed_dim << ' ' << cfg_.character_vocab << ' ' << cfg_.background_vocab << ' '
        << cfg_.motion_vocab << '\n';
    out << params_.size() << '\n';
    char buf[40];
    for (std::size_t i = 0; i < params_.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%a", params_[i]);
        out << buf << (i % 8 == 7 ? '\n' : ' ');
    }
    if (params_.size() % 8 != 0) out << '\n';
}

ScoreNetwork ScoreNetwork::load(std::istream& in) {
    std::string tag, version;
    in >> tag >> version;
    if (tag != "acdc-score-net" || version != "v1")
        throw std::runtime_error("unrecognized score network checkpoint header");
    NetConfig cfg;
    in >> cfg.state_dim >> cfg.hidden >> cfg.time_frequencies >> cfg.embed_dim >>
        cfg.character_vocab >> cfg.background_vocab >> cfg.motion_vocab;
    std::size_t n = 0;
    in >> n;
    ScoreNetwork net(cfg, 0);
    if (n != net.params_.size()) throw std::runtime_error("score network checkpoint size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        std::string tok;
        in >> tok;
        net.params_[i] = std::strtod(tok.c_str(), nullptr);
    }
    if (!in) throw std::runtime_error("truncated score network checkpoint");
    return net;
}

}  // namespace acdc
