#include "tryline/predictor.hpp"

#include <stdexcept>

namespace tryline {

std::array<double, 3> Predictor::play_probabilities(const TackleEvent&) const {
    throw std::runtime_error("play_probabilities: predictor has no decision model");
}

ModelPredictor::ModelPredictor(MdnParams params, std::optional<LogisticWeights> decision)
    : params_(std::move(params)), decision_(std::move(decision)) {}

MixtureParams ModelPredictor::mixture(const TackleEvent& e) const {
    return forward(encode_event(e, params_.encoding), params_);
}

double ModelPredictor::ex_try_set(const TackleEvent& e) const {
    return bernoulli_mean(mixture(e), BinaryDim::kTrySet);
}

double ModelPredictor::ex_try_tackle(const TackleEvent& e) const {
    return bernoulli_mean(mixture(e), BinaryDim::kTryTackle);
}

double ModelPredictor::win_probability(const TackleEvent& e) const {
    return bernoulli_mean(mixture(e), BinaryDim::kWin);
}

ScalarMixture ModelPredictor::meters_marginal(const TackleEvent& e) const {
    return marginal_continuous(mixture(e), ContinuousDim::kMeters);
}

ScalarMixture ModelPredictor::score_diff_marginal(const TackleEvent& e) const {
    return marginal_score_diff(mixture(e));
}

std::array<double, 3> ModelPredictor::play_probabilities(const TackleEvent& e) const {
    if (!decision_) return Predictor::play_probabilities(e);
    return predict_play(encode_event(e, params_.encoding), *decision_);
}

}  // namespace tryline
