#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tryline/predictor.hpp"

namespace tryline {

// Residual of one play: observed try-in-set minus the predicted chance.
// Credited to the possessing team's offense and charged, with the same sign,
// to the opponent's defense.
double play_residual(const TackleEvent& e, double predicted_ex_try_set);

struct TeamDvoa {
    int team = 0;
    double off_dvoa = 0.0;
    double def_dvoa = 0.0;
    double dvoa_diff = 0.0;  // off - def
    std::size_t off_plays = 0;
    std::size_t def_plays = 0;
    double off_mean_residual = 0.0;  // pre-centering
    double def_mean_residual = 0.0;
};

struct DvoaTable {
    std::vector<TeamDvoa> teams;  // ordered by team index; zero-play teams excluded
    double league_off_mean = 0.0;
    double league_def_mean = 0.0;
    std::size_t plays = 0;
};

DvoaTable compute_dvoa(std::span<const TackleEvent> events, const Predictor& predictor);
// Prefix aggregation by round label: entry r holds the table through round r.
std::vector<std::pair<int, DvoaTable>> cumulative_dvoa(std::span<const TackleEvent> events,
                                                       const Predictor& predictor);

struct SpatialDvoaSplit {
    double x_threshold = 75.0;
    DvoaTable normal_zone;    // pos_x < threshold
    DvoaTable final_quarter;  // pos_x >= threshold
};
SpatialDvoaSplit spatial_split_dvoa(std::span<const TackleEvent> events,
                                    const Predictor& predictor, double x_threshold = 75.0);

// Average model exTrySet binned by tackle number x 10 m attacking-x zones.
// Empty bins inherit the nearest non-empty zone along x.
struct BaselineTable {
    static constexpr int kTackles = 6;
    static constexpr int kZones = 10;
    std::array<std::array<double, kZones>, kTackles> mean_ex_try{};
    std::array<std::array<std::size_t, kZones>, kTackles> counts{};

    double at(int tackle_number, double pos_x) const;
    static int zone_of(double pos_x);
};
BaselineTable baseline_table(std::span<const TackleEvent> events, const Predictor& predictor);

struct SetTraceRow {
    int tackle_number = 0;
    double pos_x = 0.0;
    double pos_y = 0.0;
    double ex_try_set = 0.0;
    double baseline = 0.0;
    double momentum = 0.0;  // ex_try_set - baseline
    double observed_meters = 0.0;
    double meters_percentile = 0.0;
    bool big_play = false;  // >= 95th percentile of the predicted carry
};

struct SetTrace {
    std::string match_id;
    int team = 0;
    std::vector<SetTraceRow> rows;
};

SetTrace set_trace(std::span<const TackleEvent> set_events, const Predictor& predictor,
                   const BaselineTable& baseline);

// Consecutive possessions of one match, in play order.
std::vector<std::vector<TackleEvent>> split_sets(std::span<const TackleEvent> match_events);

struct ScorelineRow {
    double time_remaining = 0.0;
    int tackle_number = 0;
    double actual_diff = 0.0;  // reference-team perspective
    double mean_diff = 0.0;
    double q10 = 0.0;
    double q50 = 0.0;
    double q90 = 0.0;
};

struct ScorelineTrace {
    std::string match_id;
    int reference_team = 0;  // the perspective every row is expressed in
    std::vector<ScorelineRow> rows;
};

ScorelineTrace scoreline_trace(std::span<const TackleEvent> match_events,
                               const Predictor& predictor);
// Earliest clock time after which the 90-10 interval excludes zero with a
// stable sign through the end; absent when the final row still straddles 0.
std::optional<double> game_over_point(const ScorelineTrace& trace);

// Empirical immediate points per (x-zone, decision) over the decision-labeled
// plays of a dataset; the fallback rate is the model exTryTackle.
struct DecisionZoneStats {
    static constexpr std::size_t kMinSupport = 30;
    double points_per_try = 6.0;
    std::array<std::array<std::size_t, 3>, BaselineTable::kZones> count{};
    std::array<std::array<double, 3>, BaselineTable::kZones> mean_points{};
};
DecisionZoneStats build_decision_stats(std::span<const TackleEvent> dataset,
                                       double points_per_try = 6.0);

struct DecisionOptionValue {
    double frequency = 0.0;
    double expected_points = 0.0;
    std::size_t support = 0;
    bool fallback = false;  // empirical support below threshold
};

struct DecisionValuation {
    std::array<DecisionOptionValue, 3> options{};  // PlayChoice order
};

DecisionValuation decision_value(const TackleEvent& context, const Predictor& predictor,
                                 const DecisionZoneStats& stats);

struct TeamDecisionRow {
    int team = 0;
    std::size_t plays = 0;
    double expected_points = 0.0;
    double actual_points = 0.0;
    double over_expected = 0.0;
    double run_fraction = 0.0;
    int run_rank = 0;
    int over_rank = 0;
};

// Per-team last-tackle valuation, ranked by points over expected.
std::vector<TeamDecisionRow> decision_table(std::span<const TackleEvent> dataset,
                                            const Predictor& predictor,
                                            double points_per_try = 6.0);

// Wins / losses / scores / meters per team, one row per team in the dataset.
struct TeamSeasonSummary {
    int team = 0;
    int wins = 0;
    int losses = 0;
    int draws = 0;
    double points_for = 0.0;
    double points_against = 0.0;
    double meters_for = 0.0;
    double meters_against = 0.0;
};
std::vector<TeamSeasonSummary> season_summary(std::span<const TackleEvent> events);

}  // namespace tryline
