#include "tryline/decision.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

#include "tryline/nn.hpp"
#include "tryline/training.hpp"

namespace tryline {

namespace {

std::array<double, 3> class_scores(std::span<const double> x, const LogisticWeights& lw) {
    std::array<double, 3> s{lw.b[0], lw.b[1], lw.b[2]};
    for (int c = 0; c < 3; ++c) {
        const double* row = lw.w.data() + c * lw.n_features;
        for (std::size_t j = 0; j < lw.n_features; ++j) s[c] += row[j] * x[j];
    }
    return s;
}

std::array<double, 3> softmax3(const std::array<double, 3>& s) {
    const double m = std::max({s[0], s[1], s[2]});
    std::array<double, 3> p{};
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) {
        p[c] = std::exp(s[c] - m);
        sum += p[c];
    }
    for (double& v : p) v /= sum;
    return p;
}

}  // namespace

std::array<double, 3> predict_play(std::span<const double> features, const LogisticWeights& lw) {
    if (features.size() != lw.n_features) {
        throw std::invalid_argument("predict_play: feature width " +
                                    std::to_string(features.size()) + " does not match model " +
                                    std::to_string(lw.n_features));
    }
    return softmax3(class_scores(features, lw));
}

std::array<double, 3> predict_play(const EncodedExample& ex, const LogisticWeights& lw) {
    return predict_play(flatten_context(ex), lw);
}

double decision_loss(std::span<const double> X, std::span<const int> y, const LogisticWeights& lw,
                     double l2) {
    const std::size_t F = lw.n_features;
    const std::size_t n = y.size();
    if (X.size() != n * F) throw std::invalid_argument("decision_loss: matrix shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto s = class_scores(X.subspan(i * F, F), lw);
        const double m = std::max({s[0], s[1], s[2]});
        const double lse = m + std::log(std::exp(s[0] - m) + std::exp(s[1] - m) + std::exp(s[2] - m));
        acc += lse - s[static_cast<std::size_t>(y[i])];
    }
    double reg = 0.0;
    for (double w : lw.w) reg += w * w;
    return acc / static_cast<double>(n) + 0.5 * l2 * reg;
}

void decision_loss_grad(std::span<const double> X, std::span<const int> y,
                        const LogisticWeights& lw, double l2, std::vector<double>& grad_w,
                        std::array<double, 3>& grad_b) {
    const std::size_t F = lw.n_features;
    const std::size_t n = y.size();
    grad_w.assign(3 * F, 0.0);
    grad_b = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = X.subspan(i * F, F);
        auto p = softmax3(class_scores(x, lw));
        p[static_cast<std::size_t>(y[i])] -= 1.0;
        for (int c = 0; c < 3; ++c) {
            const double pc = p[c];
            double* row = grad_w.data() + c * F;
            for (std::size_t j = 0; j < F; ++j) row[j] += pc * x[j];
            grad_b[c] += pc;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < grad_w.size(); ++k) grad_w[k] = grad_w[k] * inv_n + l2 * lw.w[k];
    for (double& g : grad_b) g *= inv_n;
}

DecisionTrainResult train_logistic(const std::vector<TackleEvent>& labeled,
                                   const EncodingConfig& encoding,
                                   const DecisionTrainConfig& config) {
    if (labeled.empty()) throw std::invalid_argument("train_logistic: empty dataset");
    for (const auto& e : labeled) {
        if (!e.last_tackle_play) {
            throw std::invalid_argument("train_logistic: event without last_tackle_play label");
        }
    }

    std::vector<TackleEvent> fit = labeled;
    std::vector<TackleEvent> held;
    if (config.holdout_fraction > 0.0) {
        try {
            auto split = split_dataset(labeled, 1.0 - config.holdout_fraction, config.seed);
            fit = std::move(split.first);
            held = std::move(split.second);
        } catch (const std::invalid_argument&) {
            held = labeled;  // single match: report on the train set
        }
    } else {
        held = labeled;
    }

    const std::size_t F = flat_context_width(encoding);
    auto build = [&](const std::vector<TackleEvent>& events, std::vector<double>& X,
                     std::vector<int>& y) {
        X.reserve(events.size() * F);
        y.reserve(events.size());
        for (const auto& e : events) {
            const auto flat = flatten_context(encode_event(e, encoding));
            X.insert(X.end(), flat.begin(), flat.end());
            y.push_back(static_cast<int>(*e.last_tackle_play));
        }
    };
    std::vector<double> X_fit, X_held;
    std::vector<int> y_fit, y_held;
    build(fit, X_fit, y_fit);
    build(held, X_held, y_held);

    DecisionTrainResult result;
    for (int c : y_fit) result.class_counts[static_cast<std::size_t>(c)] += 1;
    for (int c = 0; c < 3; ++c) {
        if (result.class_counts[static_cast<std::size_t>(c)] == 0) {
            std::cerr << "warning: play class '" << play_choice_name(static_cast<PlayChoice>(c))
                      << "' absent from training data; its probability is prior-driven only\n";
        }
    }

    // Full-batch adaptive-moment descent on the convex objective; zero init.
    ParamTensor w({3, F});
    ParamTensor b({3});
    std::vector<ParamTensor*> tensors{&w, &b};
    AdamConfig adam_cfg;
    adam_cfg.lr = config.learning_rate;
    AdamState adam = make_adam_state(tensors, adam_cfg);

    LogisticWeights lw;
    lw.n_features = F;
    lw.w = w.values;
    lw.b = {0, 0, 0};
    std::vector<double> grad_w;
    std::array<double, 3> grad_b{};
    for (int it = 0; it < config.iterations; ++it) {
        lw.w = w.values;
        lw.b = {b.values[0], b.values[1], b.values[2]};
        decision_loss_grad(X_fit, y_fit, lw, config.l2, grad_w, grad_b);
        w.grad = grad_w;
        b.grad = {grad_b[0], grad_b[1], grad_b[2]};
        adam_step(tensors, adam);
    }
    lw.w = w.values;
    lw.b = {b.values[0], b.values[1], b.values[2]};

    result.weights = lw;
    result.train_loss = decision_loss(X_fit, y_fit, lw, 0.0);
    result.holdout_loss = decision_loss(X_held, y_held, lw, 0.0);
    return result;
}

}  // namespace tryline
