#include "tryline/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace tryline {

double play_residual(const TackleEvent& e, double predicted_ex_try_set) {
    if (!(predicted_ex_try_set > 0.0 && predicted_ex_try_set < 1.0)) {
        throw std::invalid_argument("play_residual: exTrySet must lie in (0,1)");
    }
    return (e.try_this_set ? 1.0 : 0.0) - predicted_ex_try_set;
}

namespace {

struct TeamAccumulator {
    double off_sum = 0.0;
    double def_sum = 0.0;
    std::size_t off_n = 0;
    std::size_t def_n = 0;
};

DvoaTable aggregate_dvoa(std::span<const TackleEvent> events, std::span<const double> residuals) {
    std::map<int, TeamAccumulator> acc;
    double league_sum = 0.0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const double r = residuals[i];
        league_sum += r;
        auto& off = acc[events[i].team_idx];
        off.off_sum += r;
        off.off_n += 1;
        auto& def = acc[events[i].opponent_idx];
        def.def_sum += r;
        def.def_n += 1;
    }
    DvoaTable table;
    table.plays = events.size();
    const double league_mean = events.empty() ? 0.0 : league_sum / events.size();
    table.league_off_mean = league_mean;
    table.league_def_mean = league_mean;
    for (const auto& [team, a] : acc) {
        if (a.off_n == 0 && a.def_n == 0) continue;
        if (a.off_n == 0 || a.def_n == 0) {
            std::cerr << "warning: team " << team << " has plays on only one side of the ball\n";
        }
        TeamDvoa row;
        row.team = team;
        row.off_plays = a.off_n;
        row.def_plays = a.def_n;
        row.off_mean_residual = a.off_n ? a.off_sum / a.off_n : 0.0;
        row.def_mean_residual = a.def_n ? a.def_sum / a.def_n : 0.0;
        row.off_dvoa = row.off_mean_residual - league_mean;
        row.def_dvoa = row.def_mean_residual - league_mean;
        row.dvoa_diff = row.off_dvoa - row.def_dvoa;
        table.teams.push_back(row);
    }
    return table;
}

std::vector<double> predict_residuals(std::span<const TackleEvent> events,
                                      const Predictor& predictor) {
    std::vector<double> residuals;
    residuals.reserve(events.size());
    for (const auto& e : events) {
        residuals.push_back(play_residual(e, predictor.ex_try_set(e)));
    }
    return residuals;
}

}  // namespace

DvoaTable compute_dvoa(std::span<const TackleEvent> events, const Predictor& predictor) {
    if (events.empty()) throw std::invalid_argument("compute_dvoa: empty dataset");
    const auto residuals = predict_residuals(events, predictor);
    return aggregate_dvoa(events, residuals);
}

std::vector<std::pair<int, DvoaTable>> cumulative_dvoa(std::span<const TackleEvent> events,
                                                       const Predictor& predictor) {
    if (events.empty()) throw std::invalid_argument("cumulative_dvoa: empty dataset");
    const auto residuals = predict_residuals(events, predictor);

    std::vector<int> rounds;
    for (const auto& e : events) rounds.push_back(e.round);
    std::vector<int> distinct = rounds;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    // index events by round once, then aggregate growing prefixes
    std::vector<std::size_t> order(events.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rounds[a] < rounds[b]; });

    std::vector<std::pair<int, DvoaTable>> out;
    std::vector<TackleEvent> prefix_events;
    std::vector<double> prefix_residuals;
    std::size_t cursor = 0;
    for (int r : distinct) {
        while (cursor < order.size() && rounds[order[cursor]] <= r) {
            prefix_events.push_back(events[order[cursor]]);
            prefix_residuals.push_back(residuals[order[cursor]]);
            ++cursor;
        }
        out.emplace_back(r, aggregate_dvoa(prefix_events, prefix_residuals));
    }
    return out;
}

SpatialDvoaSplit spatial_split_dvoa(std::span<const TackleEvent> events,
                                    const Predictor& predictor, double x_threshold) {
    if (!(x_threshold > 0.0 && x_threshold < 100.0) && x_threshold != 0.0) {
        throw std::invalid_argument("spatial_split_dvoa: threshold outside [0,100)");
    }
    const auto residuals = predict_residuals(events, predictor);
    std::vector<TackleEvent> lo_e, hi_e;
    std::vector<double> lo_r, hi_r;
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].pos_x < x_threshold) {
            lo_e.push_back(events[i]);
            lo_r.push_back(residuals[i]);
        } else {
            hi_e.push_back(events[i]);
            hi_r.push_back(residuals[i]);
        }
    }
    SpatialDvoaSplit split;
    split.x_threshold = x_threshold;
    if (lo_e.empty()) std::cerr << "warning: normal zone has no plays\n";
    if (hi_e.empty()) std::cerr << "warning: final-quarter zone has no plays\n";
    split.normal_zone = aggregate_dvoa(lo_e, lo_r);
    split.final_quarter = aggregate_dvoa(hi_e, hi_r);
    return split;
}

int BaselineTable::zone_of(double pos_x) {
    return std::min(kZones - 1, std::max(0, static_cast<int>(pos_x / 10.0)));
}

double BaselineTable::at(int tackle_number, double pos_x) const {
    if (tackle_number < 1 || tackle_number > kTackles) {
        throw std::invalid_argument("BaselineTable::at: tackle outside [1,6]");
    }
    return mean_ex_try[static_cast<std::size_t>(tackle_number - 1)][static_cast<std::size_t>(zone_of(pos_x))];
}

BaselineTable baseline_table(std::span<const TackleEvent> events, const Predictor& predictor) {
    if (events.empty()) throw std::invalid_argument("baseline_table: empty dataset");
    BaselineTable t;
    std::array<std::array<double, BaselineTable::kZones>, BaselineTable::kTackles> sums{};
    for (const auto& e : events) {
        const int row = e.tackle_number - 1;
        const int z = BaselineTable::zone_of(e.pos_x);
        sums[static_cast<std::size_t>(row)][static_cast<std::size_t>(z)] += predictor.ex_try_set(e);
        t.counts[static_cast<std::size_t>(row)][static_cast<std::size_t>(z)] += 1;
    }
    for (int row = 0; row < BaselineTable::kTackles; ++row) {
        for (int z = 0; z < BaselineTable::kZones; ++z) {
            if (t.counts[row][z] > 0) {
                t.mean_ex_try[row][z] = sums[row][z] / static_cast<double>(t.counts[row][z]);
            }
        }
        // empty bins inherit the nearest filled zone along x
        for (int z = 0; z < BaselineTable::kZones; ++z) {
            if (t.counts[row][z] > 0) continue;
            for (int d = 1; d < BaselineTable::kZones; ++d) {
                const int left = z - d;
                const int right = z + d;
                if (left >= 0 && t.counts[row][left] > 0) {
                    t.mean_ex_try[row][z] = t.mean_ex_try[row][left];
                    break;
                }
                if (right < BaselineTable::kZones && t.counts[row][right] > 0) {
                    t.mean_ex_try[row][z] = t.mean_ex_try[row][right];
                    break;
                }
            }
        }
    }
    return t;
}

SetTrace set_trace(std::span<const TackleEvent> set_events, const Predictor& predictor,
                   const BaselineTable& baseline) {
    if (set_events.empty()) throw std::invalid_argument("set_trace: empty set");
    if (set_events.size() > 6) throw std::invalid_argument("set_trace: more than 6 tackles");
    for (std::size_t i = 0; i < set_events.size(); ++i) {
        const auto& e = set_events[i];
        if (e.match_id != set_events[0].match_id || e.team_idx != set_events[0].team_idx ||
            e.back_to_back != set_events[0].back_to_back ||
            (i > 0 && e.tackle_number <= set_events[i - 1].tackle_number)) {
            throw std::invalid_argument("set_trace: events do not form a single ordered set");
        }
    }
    SetTrace trace;
    trace.match_id = set_events[0].match_id;
    trace.team = set_events[0].team_idx;
    for (const auto& e : set_events) {
        SetTraceRow row;
        row.tackle_number = e.tackle_number;
        row.pos_x = e.pos_x;
        row.pos_y = e.pos_y;
        row.ex_try_set = predictor.ex_try_set(e);
        row.baseline = baseline.at(e.tackle_number, e.pos_x);
        row.momentum = row.ex_try_set - row.baseline;
        row.observed_meters = e.meters_gained;
        row.meters_percentile = percentile_of(predictor.meters_marginal(e), e.meters_gained);
        row.big_play = row.meters_percentile >= 0.95;
        trace.rows.push_back(row);
    }
    return trace;
}

std::vector<std::vector<TackleEvent>> split_sets(std::span<const TackleEvent> match_events) {
    std::vector<std::vector<TackleEvent>> sets;
    for (const auto& e : match_events) {
        const bool fresh = sets.empty() || e.team_idx != sets.back().back().team_idx ||
                           e.tackle_number <= sets.back().back().tackle_number;
        if (fresh) sets.emplace_back();
        sets.back().push_back(e);
    }
    return sets;
}

ScorelineTrace scoreline_trace(std::span<const TackleEvent> match_events,
                               const Predictor& predictor) {
    if (match_events.empty()) throw std::invalid_argument("scoreline_trace: empty match");
    ScorelineTrace trace;
    trace.match_id = match_events[0].match_id;
    trace.reference_team = match_events[0].team_idx;
    double prev_time = match_events[0].time_remaining;
    for (const auto& e : match_events) {
        if (e.match_id != trace.match_id) {
            throw std::invalid_argument("scoreline_trace: events from multiple matches");
        }
        if (e.time_remaining > prev_time) {
            throw std::invalid_argument("scoreline_trace: events not ordered by clock");
        }
        prev_time = e.time_remaining;

        auto d = predictor.score_diff_marginal(e);
        const bool flip = e.team_idx != trace.reference_team;
        if (flip) {
            for (double& m : d.mu) m = -m;
        }
        ScorelineRow row;
        row.time_remaining = e.time_remaining;
        row.tackle_number = e.tackle_number;
        row.actual_diff = flip ? -e.score_diff : e.score_diff;
        row.mean_diff = mixture_mean(d);
        row.q10 = mixture_quantile(d, 0.10);
        row.q50 = mixture_quantile(d, 0.50);
        row.q90 = mixture_quantile(d, 0.90);
        trace.rows.push_back(row);
    }
    return trace;
}

std::optional<double> game_over_point(const ScorelineTrace& trace) {
    const auto& rows = trace.rows;
    if (rows.empty()) return std::nullopt;
    auto decided = [](const ScorelineRow& r) {
        return (r.q10 > 0.0 && r.q90 > 0.0) || (r.q10 < 0.0 && r.q90 < 0.0);
    };
    if (!decided(rows.back())) return std::nullopt;
    std::size_t start = rows.size() - 1;
    while (start > 0 && decided(rows[start - 1])) --start;
    return rows[start].time_remaining;
}

DecisionZoneStats build_decision_stats(std::span<const TackleEvent> dataset,
                                       double points_per_try) {
    DecisionZoneStats stats;
    stats.points_per_try = points_per_try;
    std::array<std::array<double, 3>, BaselineTable::kZones> sums{};
    for (const auto& e : dataset) {
        if (!e.last_tackle_play) continue;
        const int z = BaselineTable::zone_of(e.pos_x);
        const auto c = static_cast<std::size_t>(*e.last_tackle_play);
        stats.count[static_cast<std::size_t>(z)][c] += 1;
        sums[static_cast<std::size_t>(z)][c] += e.try_this_tackle ? points_per_try : 0.0;
    }
    for (int z = 0; z < BaselineTable::kZones; ++z) {
        for (int c = 0; c < 3; ++c) {
            if (stats.count[z][c] > 0) {
                stats.mean_points[z][c] = sums[z][c] / static_cast<double>(stats.count[z][c]);
            }
        }
    }
    return stats;
}

DecisionValuation decision_value(const TackleEvent& context, const Predictor& predictor,
                                 const DecisionZoneStats& stats) {
    if (!context.last_tackle_play && context.tackle_number != 6) {
        throw std::invalid_argument("decision_value: context is not a last-tackle state");
    }
    const auto freq = predictor.play_probabilities(context);
    const int z = BaselineTable::zone_of(context.pos_x);
    DecisionValuation val;
    for (int c = 0; c < 3; ++c) {
        auto& opt = val.options[static_cast<std::size_t>(c)];
        opt.frequency = freq[static_cast<std::size_t>(c)];
        opt.support = stats.count[static_cast<std::size_t>(z)][static_cast<std::size_t>(c)];
        if (opt.support >= DecisionZoneStats::kMinSupport) {
            opt.expected_points = stats.mean_points[static_cast<std::size_t>(z)][static_cast<std::size_t>(c)];
        } else {
            opt.fallback = true;
            opt.expected_points = predictor.ex_try_tackle(context) * stats.points_per_try;
        }
    }
    return val;
}

std::vector<TeamDecisionRow> decision_table(std::span<const TackleEvent> dataset,
                                            const Predictor& predictor, double points_per_try) {
    const auto stats = build_decision_stats(dataset, points_per_try);
    std::map<int, TeamDecisionRow> rows;
    std::map<int, std::size_t> runs;
    for (const auto& e : dataset) {
        if (!e.last_tackle_play) continue;
        auto& row = rows[e.team_idx];
        row.team = e.team_idx;
        row.plays += 1;
        const auto val = decision_value(e, predictor, stats);
        double expected = 0.0;
        for (const auto& opt : val.options) expected += opt.frequency * opt.expected_points;
        row.expected_points += expected;
        row.actual_points += e.try_this_tackle ? points_per_try : 0.0;
        if (*e.last_tackle_play == PlayChoice::kRun) runs[e.team_idx] += 1;
    }
    std::vector<TeamDecisionRow> out;
    for (auto& [team, row] : rows) {
        row.expected_points /= static_cast<double>(row.plays);
        row.actual_points /= static_cast<double>(row.plays);
        row.over_expected = row.actual_points - row.expected_points;
        row.run_fraction = static_cast<double>(runs[team]) / static_cast<double>(row.plays);
        out.push_back(row);
    }
    std::vector<std::size_t> idx(out.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return out[a].run_fraction > out[b].run_fraction; });
    for (std::size_t r = 0; r < idx.size(); ++r) out[idx[r]].run_rank = static_cast<int>(r) + 1;
    std::sort(out.begin(), out.end(), [](const TeamDecisionRow& a, const TeamDecisionRow& b) {
        return a.over_expected > b.over_expected;
    });
    for (std::size_t r = 0; r < out.size(); ++r) out[r].over_rank = static_cast<int>(r) + 1;
    return out;
}

std::vector<TeamSeasonSummary> season_summary(std::span<const TackleEvent> events) {
    struct MatchInfo {
        int team_a = -1;
        int team_b = -1;
        double score_a = 0.0;
        double score_b = 0.0;
    };
    std::map<std::string, MatchInfo> matches;
    std::map<int, TeamSeasonSummary> teams;
    for (const auto& e : events) {
        auto& m = matches[e.match_id];
        if (m.team_a < 0) {
            m.team_a = e.team_idx;
            m.team_b = e.opponent_idx;
            m.score_a = e.final_score_for;
            m.score_b = e.final_score_against;
        }
        auto& off = teams[e.team_idx];
        off.team = e.team_idx;
        off.meters_for += e.meters_gained;
        auto& def = teams[e.opponent_idx];
        def.team = e.opponent_idx;
        def.meters_against += e.meters_gained;
    }
    for (const auto& [id, m] : matches) {
        auto& a = teams[m.team_a];
        auto& b = teams[m.team_b];
        a.points_for += m.score_a;
        a.points_against += m.score_b;
        b.points_for += m.score_b;
        b.points_against += m.score_a;
        if (m.score_a > m.score_b) {
            a.wins += 1;
            b.losses += 1;
        } else if (m.score_b > m.score_a) {
            b.wins += 1;
            a.losses += 1;
        } else {
            a.draws += 1;
            b.draws += 1;
        }
    }
    std::vector<TeamSeasonSummary> out;
    for (const auto& [team, row] : teams) out.push_back(row);
    return out;
}

}  // namespace tryline
