#include "tryline/mdn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tryline {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2*pi)
}

void ModelArchitecture::validate() const {
    if (embedding_dim_team < 1 || embedding_dim_tackle < 1 || spatial_hidden < 1 ||
        spatial_layers < 1 || trunk_hidden < 1 || mixtures < 1) {
        throw std::invalid_argument("ModelArchitecture: all sizes must be >= 1");
    }
}

std::vector<ParamTensor*> MdnParams::tensors() {
    std::vector<ParamTensor*> t{&team_embedding, &opponent_embedding, &tackle_embedding};
    for (auto& w : spatial_weights) t.push_back(&w);
    for (auto& b : spatial_biases) t.push_back(&b);
    for (auto& w : trunk_weights) t.push_back(&w);
    for (auto& b : trunk_biases) t.push_back(&b);
    t.push_back(&output_weights);
    t.push_back(&output_bias);
    return t;
}

std::vector<const ParamTensor*> MdnParams::tensors() const {
    auto t = const_cast<MdnParams*>(this)->tensors();
    return {t.begin(), t.end()};
}

std::size_t MdnParams::parameter_count() const {
    std::size_t n = 0;
    for (const ParamTensor* t : tensors()) n += t->size();
    return n;
}

MdnParams init_model(const ModelArchitecture& arch, const EncodingConfig& encoding,
                     std::uint64_t seed) {
    arch.validate();
    std::mt19937_64 rng(seed);
    MdnParams p;
    p.arch = arch;
    p.encoding = encoding;

    const std::size_t vocab = static_cast<std::size_t>(encoding.n_seasons + encoding.n_teams);
    const std::size_t emb_t = static_cast<std::size_t>(arch.embedding_dim_team);
    const std::size_t emb_k = static_cast<std::size_t>(arch.embedding_dim_tackle);

    p.team_embedding = ParamTensor({vocab, emb_t});
    glorot_fill(p.team_embedding, vocab, emb_t, rng);
    p.opponent_embedding = ParamTensor({vocab, emb_t});
    glorot_fill(p.opponent_embedding, vocab, emb_t, rng);
    p.tackle_embedding = ParamTensor({7, emb_k});
    glorot_fill(p.tackle_embedding, 7, emb_k, rng);

    // Rectifier layers get a small positive bias so no layer starts dead
    // (and no preactivation sits exactly on the rectifier kink).
    constexpr double kBiasInit = 0.01;

    std::size_t in = 2;
    for (int i = 0; i < arch.spatial_layers; ++i) {
        const std::size_t out = static_cast<std::size_t>(arch.spatial_hidden);
        p.spatial_weights.emplace_back(std::vector<std::size_t>{out, in});
        glorot_fill(p.spatial_weights.back(), in, out, rng);
        p.spatial_biases.emplace_back(std::vector<std::size_t>{out});
        std::fill(p.spatial_biases.back().values.begin(), p.spatial_biases.back().values.end(),
                  kBiasInit);
        in = out;
    }

    in = static_cast<std::size_t>(arch.trunk_input_width());
    for (int i = 0; i < ModelArchitecture::trunk_layers; ++i) {
        const std::size_t out = static_cast<std::size_t>(arch.trunk_hidden);
        p.trunk_weights.emplace_back(std::vector<std::size_t>{out, in});
        glorot_fill(p.trunk_weights.back(), in, out, rng);
        p.trunk_biases.emplace_back(std::vector<std::size_t>{out});
        std::fill(p.trunk_biases.back().values.begin(), p.trunk_biases.back().values.end(),
                  kBiasInit);
        in = out;
    }

    const std::size_t out_w = static_cast<std::size_t>(arch.output_width());
    p.output_weights = ParamTensor({out_w, in});
    glorot_fill(p.output_weights, in, out_w, rng);
    p.output_bias = ParamTensor({out_w});
    return p;
}

namespace {

void check_vocab(const EncodedExample& ex, const MdnParams& params) {
    const std::size_t vocab = params.team_embedding.rows();
    if (ex.team_indicator.size() != vocab || ex.opponent_indicator.size() != vocab ||
        ex.team_slot >= vocab || ex.opponent_slot >= vocab) {
        throw std::runtime_error("forward: example encoded with vocabulary of " +
                                 std::to_string(ex.team_indicator.size()) +
                                 " but model expects " + std::to_string(vocab));
    }
}

}  // namespace

MixtureNodes forward_on_tape(Tape& tape, const EncodedExample& ex, MdnParams& params) {
    check_vocab(ex, params);
    const int K = params.arch.mixtures;

    const std::size_t team_rows[2] = {ex.season_slot, ex.team_slot};
    const std::size_t opp_rows[2] = {ex.opponent_season_slot, ex.opponent_slot};
    const NodeId team = tape.embed_sum(params.team_embedding, team_rows);
    const NodeId opp = tape.embed_sum(params.opponent_embedding, opp_rows);

    NodeId tackle;
    if (ex.back_to_back) {
        const std::size_t rows[2] = {ex.tackle_slot, 6};
        tackle = tape.embed_sum(params.tackle_embedding, rows);
    } else {
        const std::size_t rows[1] = {ex.tackle_slot};
        tackle = tape.embed_sum(params.tackle_embedding, rows);
    }

    const NodeId pos = tape.leaf(std::span<const double>(ex.position_raw));
    NodeId spatial = pos;
    for (std::size_t i = 0; i < params.spatial_weights.size(); ++i) {
        spatial = tape.relu(tape.dense(spatial, params.spatial_weights[i], &params.spatial_biases[i]));
    }

    const NodeId ctx = tape.leaf(std::span<const double>(ex.dense_context));
    const NodeId parts[6] = {team, opp, tackle, spatial, pos, ctx};
    NodeId h = tape.concat(parts);
    for (std::size_t i = 0; i < params.trunk_weights.size(); ++i) {
        h = tape.relu(tape.dense(h, params.trunk_weights[i], &params.trunk_biases[i]));
    }
    const NodeId raw = tape.dense(h, params.output_weights, &params.output_bias);

    // Output layout: [pi logits (K) | mu (3K) | sigma raw (3K) | p logits (3K)].
    const std::size_t k = static_cast<std::size_t>(K);
    const NodeId pi_logits = tape.slice(raw, 0, k);
    MixtureNodes nodes;
    nodes.mixtures = K;
    nodes.pi = tape.softmax(pi_logits);
    nodes.log_pi = tape.log_softmax(pi_logits);
    nodes.mu = tape.slice(raw, k, 3 * k);
    nodes.sigma = tape.add_const(tape.softplus(tape.slice(raw, 4 * k, 3 * k)), kSigmaFloor);
    nodes.p_logits = tape.slice(raw, 7 * k, 3 * k);
    nodes.p = tape.sigmoid(nodes.p_logits);
    return nodes;
}

MixtureParams extract_mixture(const Tape& tape, const MixtureNodes& nodes) {
    MixtureParams mix;
    mix.mixtures = nodes.mixtures;
    auto pi = tape.value(nodes.pi);
    auto mu = tape.value(nodes.mu);
    auto sigma = tape.value(nodes.sigma);
    auto p = tape.value(nodes.p);
    mix.weights.assign(pi.begin(), pi.end());
    mix.mu.assign(mu.begin(), mu.end());
    mix.sigma.assign(sigma.begin(), sigma.end());
    mix.p.assign(p.begin(), p.end());
    // Keep Bernoulli parameters in the open interval even when the logits
    // saturate the double-precision sigmoid.
    for (double& v : mix.p) v = std::clamp(v, 1e-15, 1.0 - 1e-15);
    return mix;
}

MixtureParams forward(const EncodedExample& ex, const MdnParams& params) {
    Tape tape;
    auto nodes = forward_on_tape(tape, ex, const_cast<MdnParams&>(params));
    return extract_mixture(tape, nodes);
}

double joint_nll(const MixtureParams& mix, const GameStateTarget& target) {
    const int K = mix.mixtures;
    if (K < 1 || mix.weights.size() != static_cast<std::size_t>(K) ||
        mix.mu.size() != static_cast<std::size_t>(K * kContinuousDims) ||
        mix.sigma.size() != mix.mu.size() ||
        mix.p.size() != static_cast<std::size_t>(K * kBinaryDims)) {
        throw std::invalid_argument("joint_nll: malformed MixtureParams");
    }
    const double y_cont[kContinuousDims] = {target.meters, target.score_for, target.score_against};
    const double y_bin[kBinaryDims] = {target.try_tackle ? 1.0 : 0.0, target.try_set ? 1.0 : 0.0,
                                       target.won ? 1.0 : 0.0};
    std::vector<double> comp(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        double a = std::log(mix.weights[k]);
        for (int d = 0; d < kContinuousDims; ++d) {
            const double s = mix.sigma[k * kContinuousDims + d];
            const double z = (y_cont[d] - mix.mu[k * kContinuousDims + d]) / s;
            a += -kHalfLog2Pi - std::log(s) - 0.5 * z * z;
        }
        for (int d = 0; d < kBinaryDims; ++d) {
            const double p = mix.p[k * kBinaryDims + d];
            a += y_bin[d] > 0.5 ? std::log(p) : std::log1p(-p);
        }
        comp[k] = a;
    }
    const double loss = -log_sum_exp(comp);
    if (!std::isfinite(loss)) {
        int worst = 0;
        for (int k = 0; k < K; ++k)
            if (!std::isfinite(comp[k]) || comp[k] < comp[worst]) worst = k;
        throw std::runtime_error("joint_nll: non-finite loss (component " + std::to_string(worst) +
                                 " log-likelihood " + std::to_string(comp[worst]) + ")");
    }
    return loss;
}

NodeId nll_on_tape(Tape& tape, const MixtureNodes& nodes, const GameStateTarget& target) {
    const int K = nodes.mixtures;
    const std::size_t n3 = static_cast<std::size_t>(K) * kContinuousDims;

    std::vector<double> y_cont(n3), y_mask(n3), y_inv(n3);
    const double yc[kContinuousDims] = {target.meters, target.score_for, target.score_against};
    const double yb[kBinaryDims] = {target.try_tackle ? 1.0 : 0.0, target.try_set ? 1.0 : 0.0,
                                    target.won ? 1.0 : 0.0};
    for (int k = 0; k < K; ++k) {
        for (int d = 0; d < kContinuousDims; ++d) y_cont[k * kContinuousDims + d] = yc[d];
        for (int d = 0; d < kBinaryDims; ++d) {
            y_mask[k * kBinaryDims + d] = yb[d];
            y_inv[k * kBinaryDims + d] = 1.0 - yb[d];
        }
    }

    // Gaussian log-density per (component, dim), summed within components.
    const NodeId y = tape.leaf(y_cont);
    const NodeId z = tape.div(tape.sub(y, nodes.mu), nodes.sigma);
    const NodeId z2 = tape.mul(z, z);
    const NodeId cont_el = tape.add_const(
        tape.add(tape.scale(z2, -0.5), tape.scale(tape.log(nodes.sigma), -1.0)), -kHalfLog2Pi);
    const NodeId cont_k = tape.group_sum(cont_el, static_cast<std::size_t>(K));

    // Bernoulli log-likelihood from the logits: y ? -softplus(-x) : -softplus(x).
    const NodeId mask = tape.leaf(y_mask);
    const NodeId inv_mask = tape.leaf(y_inv);
    const NodeId sp_pos = tape.softplus(nodes.p_logits);
    const NodeId sp_neg = tape.softplus(tape.scale(nodes.p_logits, -1.0));
    const NodeId bin_el =
        tape.scale(tape.add(tape.mul(mask, sp_neg), tape.mul(inv_mask, sp_pos)), -1.0);
    const NodeId bin_k = tape.group_sum(bin_el, static_cast<std::size_t>(K));

    const NodeId comp = tape.add(tape.add(nodes.log_pi, cont_k), bin_k);
    return tape.scale(tape.log_sum_exp(comp), -1.0);
}

NodeId batch_loss_on_tape(Tape& tape, std::span<const EncodedExample> batch, MdnParams& params) {
    if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
    std::vector<NodeId> losses;
    losses.reserve(batch.size());
    for (const auto& ex : batch) {
        const auto nodes = forward_on_tape(tape, ex, params);
        losses.push_back(nll_on_tape(tape, nodes, ex.target));
    }
    return tape.mean(losses);
}

double batch_loss(std::span<const EncodedExample> batch, const MdnParams& params) {
    Tape tape;
    const NodeId loss = batch_loss_on_tape(tape, batch, const_cast<MdnParams&>(params));
    return tape.scalar(loss);
}

}  // namespace tryline
