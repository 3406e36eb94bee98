#include "tryline/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "tryline/mixture.hpp"

namespace tryline {

namespace {

std::vector<std::string> match_ids_in_order(const std::vector<TackleEvent>& events) {
    std::vector<std::string> ids;
    std::unordered_map<std::string, bool> seen;
    for (const auto& e : events) {
        if (!seen.count(e.match_id)) {
            seen[e.match_id] = true;
            ids.push_back(e.match_id);
        }
    }
    return ids;
}

double inverse_softplus(double y) {
    // softplus(x) = y  =>  x = log(e^y - 1); linear for large y.
    if (y > 30.0) return y;
    return std::log(std::expm1(std::max(y, 1e-6)));
}

double logit(double p) {
    const double q = std::clamp(p, 1e-3, 1.0 - 1e-3);
    return std::log(q / (1.0 - q));
}

// Data-driven head start: point the output bias at the target moments so the
// Gaussian heads begin at the right scale instead of crawling there from
// sigma ~ 0.7.
void warm_start_output_bias(MdnParams& params, const std::vector<EncodedExample>& examples) {
    const int K = params.arch.mixtures;
    double mean[kContinuousDims] = {0, 0, 0};
    double var[kContinuousDims] = {0, 0, 0};
    double rate[kBinaryDims] = {0, 0, 0};
    const double n = static_cast<double>(examples.size());
    for (const auto& ex : examples) {
        const double yc[3] = {ex.target.meters, ex.target.score_for, ex.target.score_against};
        for (int d = 0; d < kContinuousDims; ++d) mean[d] += yc[d] / n;
        rate[0] += ex.target.try_tackle / n;
        rate[1] += ex.target.try_set / n;
        rate[2] += ex.target.won / n;
    }
    for (const auto& ex : examples) {
        const double yc[3] = {ex.target.meters, ex.target.score_for, ex.target.score_against};
        for (int d = 0; d < kContinuousDims; ++d) var[d] += (yc[d] - mean[d]) * (yc[d] - mean[d]) / n;
    }
    auto& bias = params.output_bias.values;
    for (int k = 0; k < K; ++k) {
        const double spread = K > 1 ? 2.0 * k / (K - 1.0) - 1.0 : 0.0;
        for (int d = 0; d < kContinuousDims; ++d) {
            const double sd = std::sqrt(std::max(var[d], 1.0));
            bias[K + k * kContinuousDims + d] = mean[d] + spread * sd;
            bias[4 * K + k * kContinuousDims + d] = inverse_softplus(sd);
        }
        for (int d = 0; d < kBinaryDims; ++d) {
            bias[7 * K + k * kBinaryDims + d] = logit(rate[d]);
        }
    }
}

}  // namespace

std::pair<std::vector<TackleEvent>, std::vector<TackleEvent>> split_dataset(
    const std::vector<TackleEvent>& events, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw std::invalid_argument("split_dataset: ratio " + std::to_string(ratio) +
                                    " outside (0,1)");
    }
    auto ids = match_ids_in_order(events);
    if (ids.size() < 2) {
        throw std::invalid_argument("split_dataset: need at least 2 matches, got " +
                                    std::to_string(ids.size()));
    }
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    std::size_t n_train = static_cast<std::size_t>(std::llround(ratio * ids.size()));
    n_train = std::clamp<std::size_t>(n_train, 1, ids.size() - 1);
    std::unordered_map<std::string, bool> in_train;
    for (std::size_t i = 0; i < ids.size(); ++i) in_train[ids[i]] = i < n_train;
    std::pair<std::vector<TackleEvent>, std::vector<TackleEvent>> out;
    for (const auto& e : events) {
        (in_train[e.match_id] ? out.first : out.second).push_back(e);
    }
    return out;
}

double dataset_nll(const std::vector<EncodedExample>& examples, const MdnParams& params) {
    if (examples.empty()) throw std::invalid_argument("dataset_nll: empty dataset");
    constexpr std::size_t kChunk = 1024;
    Tape tape;
    auto& mutable_params = const_cast<MdnParams&>(params);
    double acc = 0.0;
    for (std::size_t off = 0; off < examples.size(); off += kChunk) {
        const std::size_t n = std::min(kChunk, examples.size() - off);
        tape.reset();
        for (std::size_t i = 0; i < n; ++i) {
            const auto nodes = forward_on_tape(tape, examples[off + i], mutable_params);
            acc += tape.scalar(nll_on_tape(tape, nodes, examples[off + i].target));
        }
    }
    return acc / static_cast<double>(examples.size());
}

TrainResult train(const std::vector<TackleEvent>& train_events, const EncodingConfig& encoding,
                  const ModelArchitecture& arch, const TrainConfig& config) {
    if (train_events.empty()) throw std::invalid_argument("train: empty train set");
    if (config.epochs < 1 || config.batch_size < 1) {
        throw std::invalid_argument("train: epochs and batch_size must be >= 1");
    }

    // Validation slice carved from the train set at match granularity.
    std::vector<TackleEvent> fit_events;
    std::vector<TackleEvent> val_events;
    const auto ids = match_ids_in_order(train_events);
    if (config.val_fraction > 0.0 && ids.size() >= 2) {
        auto split = split_dataset(train_events, 1.0 - config.val_fraction, config.seed ^ 0x76616c);
        fit_events = std::move(split.first);
        val_events = std::move(split.second);
    } else {
        fit_events = train_events;
        val_events = train_events;
    }
    const auto fit = encode_events(fit_events, encoding);
    const auto val = encode_events(val_events, encoding);

    MdnParams params = init_model(arch, encoding, config.seed);
    warm_start_output_bias(params, fit);

    auto tensors = params.tensors();
    AdamConfig adam_cfg;
    adam_cfg.lr = config.learning_rate;
    AdamState adam = make_adam_state(tensors, adam_cfg);

    TrainResult result;
    result.params = params;
    result.best_val_nll = std::numeric_limits<double>::infinity();
    result.best_epoch = 0;

    std::mt19937_64 shuffle_rng(config.seed ^ 0x7368756666);
    std::vector<std::size_t> order(fit.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<EncodedExample> batch;
    batch.reserve(static_cast<std::size_t>(config.batch_size));
    Tape tape;
    int since_best = 0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double train_acc = 0.0;
        for (std::size_t off = 0; off < order.size(); off += config.batch_size) {
            const std::size_t n = std::min<std::size_t>(config.batch_size, order.size() - off);
            batch.clear();
            for (std::size_t i = 0; i < n; ++i) batch.push_back(fit[order[off + i]]);
            tape.reset();
            const NodeId loss = batch_loss_on_tape(tape, batch, params);
            const double loss_value = tape.scalar(loss);
            if (!std::isfinite(loss_value)) {
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(off / config.batch_size));
            }
            train_acc += loss_value * static_cast<double>(n);
            tape.backward(loss);
            try {
                adam_step(tensors, adam);
            } catch (const std::runtime_error& e) {
                throw std::runtime_error("train: " + std::string(e.what()) + " at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(off / config.batch_size));
            }
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_nll = train_acc / static_cast<double>(fit.size());
        stats.val_nll = dataset_nll(val, params);
        result.history.push_back(stats);

        if (stats.val_nll < result.best_val_nll) {
            result.best_val_nll = stats.val_nll;
            result.best_epoch = epoch;
            result.params = params;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    return result;
}

namespace {

BinaryHeadReport head_report(const std::vector<double>& probs, const std::vector<bool>& labels) {
    BinaryHeadReport r;
    for (int b = 0; b < 10; ++b) {
        r.bins[b].lo = b / 10.0;
        r.bins[b].hi = (b + 1) / 10.0;
    }
    std::array<double, 10> pred_sum{};
    std::array<double, 10> label_sum{};
    double brier = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        const double y = labels[i] ? 1.0 : 0.0;
        brier += (p - y) * (p - y);
        const int b = std::min(9, static_cast<int>(p * 10.0));
        r.bins[b].count += 1;
        pred_sum[b] += p;
        label_sum[b] += y;
    }
    r.brier = brier / static_cast<double>(probs.size());
    double weighted_gap = 0.0;
    for (int b = 0; b < 10; ++b) {
        if (r.bins[b].count == 0) continue;
        const double n = static_cast<double>(r.bins[b].count);
        r.bins[b].mean_predicted = pred_sum[b] / n;
        r.bins[b].empirical = label_sum[b] / n;
        weighted_gap += n * std::abs(r.bins[b].mean_predicted - r.bins[b].empirical);
    }
    r.calibration_error = weighted_gap / static_cast<double>(probs.size());
    return r;
}

}  // namespace

EvalReport evaluate(const MdnParams& params, const std::vector<TackleEvent>& test_events) {
    if (test_events.empty()) throw std::invalid_argument("evaluate: empty test set");
    const auto examples = encode_events(test_events, params.encoding);

    EvalReport report;
    report.n_examples = examples.size();

    double nll_acc = 0.0;
    double se_meters = 0.0;
    double se_score = 0.0;
    std::array<std::vector<double>, 3> probs;
    std::array<std::vector<bool>, 3> labels;
    for (auto& p : probs) p.reserve(examples.size());
    for (auto& l : labels) l.reserve(examples.size());

    for (const auto& ex : examples) {
        const auto mix = forward(ex, params);
        nll_acc += joint_nll(mix, ex.target);
        const double m_hat = mixture_mean(marginal_continuous(mix, ContinuousDim::kMeters));
        const double sf_hat = mixture_mean(marginal_continuous(mix, ContinuousDim::kScoreFor));
        const double sa_hat = mixture_mean(marginal_continuous(mix, ContinuousDim::kScoreAgainst));
        se_meters += (m_hat - ex.target.meters) * (m_hat - ex.target.meters);
        se_score += (sf_hat - ex.target.score_for) * (sf_hat - ex.target.score_for);
        se_score += (sa_hat - ex.target.score_against) * (sa_hat - ex.target.score_against);
        const bool y[3] = {ex.target.try_tackle, ex.target.try_set, ex.target.won};
        for (int d = 0; d < kBinaryDims; ++d) {
            probs[d].push_back(bernoulli_mean(mix, static_cast<BinaryDim>(d)));
            labels[d].push_back(y[d]);
        }
    }
    const double n = static_cast<double>(examples.size());
    report.nll = nll_acc / n;
    report.rmse_meters = std::sqrt(se_meters / n);
    report.rmse_scoreline = std::sqrt(se_score / (2.0 * n));
    report.try_tackle = head_report(probs[0], labels[0]);
    report.try_set = head_report(probs[1], labels[1]);
    report.win = head_report(probs[2], labels[2]);
    return report;
}

}  // namespace tryline
