#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "acdc/condition.hpp"
#include "acdc/rng.hpp"
#include "acdc/schedule.hpp"
#include "acdc/score.hpp"
#include "acdc/vecmath.hpp"

namespace acdc {

struct NetConfig {
    int state_dim = 2;
    int hidden = 64;
    int time_frequencies = 4;  // sin/cos pairs -> 2x features
    int embed_dim = 4;
    int character_vocab = 4;
    int background_vocab = 4;
    int motion_vocab = 5;

    int time_features() const { return 2 * time_frequencies; }
    int input_dim() const { return state_dim + time_features() + 3 * embed_dim; }
};

// Fully connected conditional score estimator, three tanh hidden layers,
// linear output. Conditions enter through one learned embedding row per
// attribute id; the extra row past each vocabulary is the null/unconditional
// sentinel used both for absent attributes and for CFG condition dropout.
// All gradients are computed in closed form (no autodiff dependency) and are
// checked against central finite differences in the tests.
class ScoreNetwork {
public:
    ScoreNetwork(NetConfig cfg, std::uint64_t init_seed);

    const NetConfig& config() const { return cfg_; }

    Vec forward(const Vec& x, const ConditionRecord& cond, double t) const;

    std::size_t parameter_count() const { return params_.size(); }
    const Vec& parameters() const { return params_; }
    Vec& mutable_parameters() { return params_; }

    // condition bound into a plain ScoreFn (copies the network)
    ScoreFn score_fn(const ConditionRecord& cond, bool unconditional = false) const;
    CondScoreFn cond_score_fn() const;

    void save(std::ostream& out) const;
    static ScoreNetwork load(std::istream& in);

    // Layer activations kept around for the backward pass.
    struct Workspace {
        Vec input, z1, h1, z2, h2, z3, h3, out;
        Vec dz1, dz2, dz3, dh;
        int char_row = 0, bg_row = 0, motion_row = 0;
    };

    void forward_cached(const Vec& x, const ConditionRecord& cond, double t, Workspace& ws) const;
    // accumulates dLoss/dparams into grad given dLoss/dout
    void backward(const Workspace& ws, const Vec& dout, Vec& grad) const;

private:
    NetConfig cfg_;
    Vec params_;

    // parameter block offsets
    std::size_t w1_, b1_, w2_, b2_, w3_, b3_, w4_, b4_;
    std::size_t e_char_, e_bg_, e_motion_;
    void compute_offsets();
};

enum class DsmWeighting { one, one_minus_alpha_bar };

// One Monte-Carlo draw of the DSM objective: (x0, cond) from the data, t
// uniform on [t_floor, 1], eps ~ N(0, I). Freezing the draws in the batch
// keeps the loss a deterministic function of the parameters, which is what
// makes finite-difference gradient checks exact.
struct DsmSample {
    Vec x0;
    ConditionRecord cond;
    double t = 0.5;
    Vec eps;
};

struct DsmBatch {
    std::vector<DsmSample> samples;
};

DsmBatch make_dsm_batch(const std::vector<std::pair<Vec, ConditionRecord>>& data,
                        int batch_size, double cond_dropout, Rng& rng,
                        double t_floor = 1e-3);

// mean over the batch of lambda(t) ||s_theta(x_t, y, t) + eps / sqrt(1 - ab)||^2
double dsm_loss(const ScoreNetwork& net, const DsmBatch& batch, const Schedule& s,
                DsmWeighting weighting);

// same value, also accumulating exact parameter gradients into grad
double dsm_loss_grad(const ScoreNetwork& net, const DsmBatch& batch, const Schedule& s,
                     DsmWeighting weighting, Vec& grad);

struct TrainConfig {
    int batch_size = 32;
    int steps = 2000;
    double learning_rate = 3e-3;
    DsmWeighting weighting = DsmWeighting::one_minus_alpha_bar;
    double cond_dropout = 0.1;
    double t_floor = 0.02;  // smallest diffusion time sampled by the objective
    std::uint64_t seed = 1;
};

struct TrainDiverged : std::runtime_error {
    int step;
    explicit TrainDiverged(int step_index)
        : std::runtime_error("training diverged at step " + std::to_string(step_index)),
          step(step_index) {}
};

// Adam on the DSM objective; returns the per-step loss trace
// (cfg.steps entries). Deterministic given cfg.seed.
std::vector<double> train(ScoreNetwork& net,
                          const std::vector<std::pair<Vec, ConditionRecord>>& data,
                          const Schedule& s, const TrainConfig& cfg);

}  // namespace acdc
