#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tryline/features.hpp"
#include "tryline/nn.hpp"

namespace tryline {

// Continuous output dims, in storage order.
enum class ContinuousDim { kMeters = 0, kScoreFor = 1, kScoreAgainst = 2 };
// Binary output dims, in storage order.
enum class BinaryDim { kTryTackle = 0, kTrySet = 1, kWin = 2 };

inline constexpr int kContinuousDims = 3;
inline constexpr int kBinaryDims = 3;
inline constexpr double kSigmaFloor = 1e-3;

struct ModelArchitecture {
    int embedding_dim_team = 8;
    int embedding_dim_tackle = 4;
    int spatial_hidden = 50;
    int spatial_layers = 2;
    int trunk_hidden = 64;
    static constexpr int trunk_layers = 2;
    int mixtures = 5;

    // 2 team embeddings + tackle embedding + spatial path + raw position +
    // game context.
    int trunk_input_width() const {
        return 2 * embedding_dim_team + embedding_dim_tackle + spatial_hidden + 2 + 2;
    }
    // Per mixture: weight logit + (mu, sigma, p) for each dim group.
    int output_width() const {
        return mixtures * (1 + kContinuousDims * 2 + kBinaryDims);
    }
    void validate() const;
};

// MDN head output: K mixture weights, per-component Gaussians over the
// continuous dims and Bernoulli parameters over the binary dims. mu/sigma/p
// are K x 3 row-major ([component][dim]).
struct MixtureParams {
    int mixtures = 0;
    std::vector<double> weights;
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> p;

    double mu_at(int k, ContinuousDim d) const { return mu[k * kContinuousDims + static_cast<int>(d)]; }
    double sigma_at(int k, ContinuousDim d) const { return sigma[k * kContinuousDims + static_cast<int>(d)]; }
    double p_at(int k, BinaryDim d) const { return p[k * kBinaryDims + static_cast<int>(d)]; }
};

struct MdnParams {
    ModelArchitecture arch;
    EncodingConfig encoding;

    ParamTensor team_embedding;      // [n_seasons + n_teams, emb_team]
    ParamTensor opponent_embedding;  // same layout
    ParamTensor tackle_embedding;    // [7, emb_tackle]
    std::vector<ParamTensor> spatial_weights;
    std::vector<ParamTensor> spatial_biases;
    std::vector<ParamTensor> trunk_weights;
    std::vector<ParamTensor> trunk_biases;
    ParamTensor output_weights;
    ParamTensor output_bias;

    std::vector<ParamTensor*> tensors();
    std::vector<const ParamTensor*> tensors() const;
    std::size_t parameter_count() const;
};

MdnParams init_model(const ModelArchitecture& arch, const EncodingConfig& encoding,
                     std::uint64_t seed);

// Tape handles for one forward pass; values live on the tape.
struct MixtureNodes {
    int mixtures = 0;
    NodeId pi = 0;        // K, softmax
    NodeId log_pi = 0;    // K, log-softmax of the same logits
    NodeId mu = 0;        // K*3
    NodeId sigma = 0;     // K*3, softplus + floor
    NodeId p = 0;         // K*3, sigmoid
    NodeId p_logits = 0;  // K*3, pre-sigmoid (used by the loss)
};

MixtureNodes forward_on_tape(Tape& tape, const EncodedExample& ex, MdnParams& params);
MixtureParams extract_mixture(const Tape& tape, const MixtureNodes& nodes);
// Convenience: forward on a scratch tape, returning plain mixture parameters.
MixtureParams forward(const EncodedExample& ex, const MdnParams& params);

// Joint negative log-likelihood of the observed game state under the mixture:
// -log sum_k pi_k * prod_cont N(y_d; mu_kd, sigma_kd) * prod_bin Bern(y_d; p_kd),
// evaluated in log space.
double joint_nll(const MixtureParams& mix, const GameStateTarget& target);
NodeId nll_on_tape(Tape& tape, const MixtureNodes& nodes, const GameStateTarget& target);

NodeId batch_loss_on_tape(Tape& tape, std::span<const EncodedExample> batch, MdnParams& params);
double batch_loss(std::span<const EncodedExample> batch, const MdnParams& params);

}  // namespace tryline
