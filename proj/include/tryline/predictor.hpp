#pragma once

#include <array>
#include <optional>

#include "tryline/decision.hpp"
#include "tryline/mixture.hpp"

namespace tryline {

// Query surface the analytics run against. The production implementation
// wraps a trained model; tests may substitute generator oracles.
class Predictor {
public:
    virtual ~Predictor() = default;

    virtual double ex_try_set(const TackleEvent& e) const = 0;
    virtual double ex_try_tackle(const TackleEvent& e) const = 0;
    virtual double win_probability(const TackleEvent& e) const = 0;
    virtual ScalarMixture meters_marginal(const TackleEvent& e) const = 0;
    virtual ScalarMixture score_diff_marginal(const TackleEvent& e) const = 0;

    virtual bool has_decision_model() const { return false; }
    // Last-tackle play selection; only meaningful for decision contexts.
    virtual std::array<double, 3> play_probabilities(const TackleEvent& e) const;
};

class ModelPredictor final : public Predictor {
public:
    explicit ModelPredictor(MdnParams params,
                            std::optional<LogisticWeights> decision = std::nullopt);

    double ex_try_set(const TackleEvent& e) const override;
    double ex_try_tackle(const TackleEvent& e) const override;
    double win_probability(const TackleEvent& e) const override;
    ScalarMixture meters_marginal(const TackleEvent& e) const override;
    ScalarMixture score_diff_marginal(const TackleEvent& e) const override;
    bool has_decision_model() const override { return decision_.has_value(); }
    std::array<double, 3> play_probabilities(const TackleEvent& e) const override;

    MixtureParams mixture(const TackleEvent& e) const;
    const MdnParams& model() const { return params_; }
    const std::optional<LogisticWeights>& decision_weights() const { return decision_; }

private:
    MdnParams params_;
    std::optional<LogisticWeights> decision_;
};

}  // namespace tryline
