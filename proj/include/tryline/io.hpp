#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tryline/analytics.hpp"
#include "tryline/decision.hpp"
#include "tryline/mdn.hpp"
#include "tryline/synth.hpp"
#include "tryline/training.hpp"

namespace tryline {

inline constexpr int kCheckpointVersion = 1;

// JSONL event files: one object per line, keys exactly matching the
// TackleEvent field names. Parse failures and invariant violations are
// reported with the offending line number.
std::vector<TackleEvent> read_events(const std::string& path);
void write_events(const std::string& path, const std::vector<TackleEvent>& events);

// Single event from a JSON file. Outcome fields become optional when
// require_outcomes is false (prediction-time records have no outcomes yet).
TackleEvent read_event_file(const std::string& path, bool require_outcomes);

struct TrainingMeta {
    std::uint64_t seed = 0;
    int epochs = 0;
    double final_train_nll = 0.0;
    double final_val_nll = 0.0;
};

// Self-describing single-file container: architecture + encoding + named
// parameter sections, with the decision head versioned separately.
struct Checkpoint {
    int format_version = kCheckpointVersion;
    MdnParams model;
    std::optional<LogisticWeights> decision;
    TrainingMeta meta;
};

void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

// League config file (JSON object; omitted keys fall back to make_league
// defaults; documented in docs/config-schemas.md).
LeagueSpec read_league_spec(const std::string& path);

struct TrainSettings {
    ModelArchitecture arch;
    TrainConfig train;
    DecisionTrainConfig decision;
    bool train_decision = true;
    double split_ratio = 0.8;
    std::uint64_t split_seed = 1;
};
TrainSettings read_train_settings(const std::string& path);

std::string eval_report_json(const EvalReport& report);
// Full state-vector distribution summary for one context; play-selection
// probabilities included only for tackle-6 contexts with a decision head.
std::string predict_summary_json(const Checkpoint& cp, const TackleEvent& event);

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history);
void write_dvoa_csv(const std::string& path, const DvoaTable& table,
                    const std::vector<TeamSeasonSummary>& summary);
void write_cumulative_dvoa_csv(const std::string& path,
                               const std::vector<std::pair<int, DvoaTable>>& series);
void write_spatial_dvoa_csv(const std::string& path, const SpatialDvoaSplit& split);
void write_scoreline_csv(const std::string& path, const ScorelineTrace& trace);
void write_set_trace_csv(const std::string& path, const SetTrace& trace);
void write_decisions_csv(const std::string& path, const std::vector<TeamDecisionRow>& rows);

// CLI entry point: subcommands simulate / train / evaluate / predict / dvoa /
// scoreline / set-trace / decisions. Returns 0 on success, 1 on usage errors,
// 2 on data errors.
int run_cli(const std::vector<std::string>& args);

}  // namespace tryline
