#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "tryline/mdn.hpp"

namespace tryline {

struct TrainConfig {
    int epochs = 40;
    int batch_size = 256;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
    int patience = 10;          // early stop on validation NLL
    double val_fraction = 0.1;  // carved from the train set at match level
};

struct EpochStats {
    int epoch = 0;
    double train_nll = 0.0;
    double val_nll = 0.0;
};

struct TrainResult {
    MdnParams params;  // best-validation checkpoint
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_val_nll = 0.0;
};

// Match-granular split: all tackles of a match land on one side.
std::pair<std::vector<TackleEvent>, std::vector<TackleEvent>> split_dataset(
    const std::vector<TackleEvent>& events, double ratio, std::uint64_t seed);

TrainResult train(const std::vector<TackleEvent>& train_events, const EncodingConfig& encoding,
                  const ModelArchitecture& arch, const TrainConfig& config);

struct CalibrationBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    double mean_predicted = 0.0;
    double empirical = 0.0;
};

struct BinaryHeadReport {
    double brier = 0.0;
    double calibration_error = 0.0;  // count-weighted |predicted - empirical| over bins
    std::array<CalibrationBin, 10> bins{};
};

struct EvalReport {
    double nll = 0.0;
    double rmse_meters = 0.0;
    double rmse_scoreline = 0.0;  // over the for/against score dims jointly
    BinaryHeadReport try_tackle;
    BinaryHeadReport try_set;
    BinaryHeadReport win;
    std::size_t n_examples = 0;
};

EvalReport evaluate(const MdnParams& params, const std::vector<TackleEvent>& test_events);

// Mean per-example joint NLL, evaluated in fixed chunks.
double dataset_nll(const std::vector<EncodedExample>& examples, const MdnParams& params);

}  // namespace tryline
