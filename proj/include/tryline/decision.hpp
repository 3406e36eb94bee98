#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "tryline/features.hpp"

namespace tryline {

// 3-class last-tackle play selector over flat context features
// (indicators + raw position + game context). Class order follows PlayChoice:
// run, offensive kick, defensive kick.
struct LogisticWeights {
    std::size_t n_features = 0;
    std::vector<double> w;  // 3 x F row-major
    std::array<double, 3> b{};
};

std::array<double, 3> predict_play(std::span<const double> features, const LogisticWeights& lw);
std::array<double, 3> predict_play(const EncodedExample& ex, const LogisticWeights& lw);

struct DecisionTrainConfig {
    int iterations = 600;
    double learning_rate = 0.1;
    double l2 = 1e-4;  // weights only, not biases
    std::uint64_t seed = 1;
    double holdout_fraction = 0.2;  // match-granular holdout for the reported loss
};

struct DecisionTrainResult {
    LogisticWeights weights;
    double train_loss = 0.0;
    double holdout_loss = 0.0;
    std::array<std::size_t, 3> class_counts{};
};

// Trains on the decision-labeled subset (events carrying last_tackle_play).
// Events without a label are rejected; filter first.
DecisionTrainResult train_logistic(const std::vector<TackleEvent>& labeled,
                                   const EncodingConfig& encoding,
                                   const DecisionTrainConfig& config);

// Mean multinomial cross-entropy (+ L2/2 |w|^2) and its analytic gradient,
// exposed so tests can check the gradient against finite differences.
double decision_loss(std::span<const double> features_matrix, std::span<const int> labels,
                     const LogisticWeights& lw, double l2);
void decision_loss_grad(std::span<const double> features_matrix, std::span<const int> labels,
                        const LogisticWeights& lw, double l2, std::vector<double>& grad_w,
                        std::array<double, 3>& grad_b);

}  // namespace tryline
