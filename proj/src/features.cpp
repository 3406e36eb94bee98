#include "tryline/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tryline {

const char* play_choice_name(PlayChoice c) {
    switch (c) {
        case PlayChoice::kRun: return "run";
        case PlayChoice::kOffensiveKick: return "offensive_kick";
        case PlayChoice::kDefensiveKick: return "defensive_kick";
    }
    throw std::invalid_argument("play_choice_name: bad enum value");
}

PlayChoice play_choice_from_name(const std::string& name) {
    if (name == "run") return PlayChoice::kRun;
    if (name == "offensive_kick") return PlayChoice::kOffensiveKick;
    if (name == "defensive_kick") return PlayChoice::kDefensiveKick;
    throw std::invalid_argument("unknown play choice '" + name + "'");
}

namespace {
[[noreturn]] void reject(const std::string& field, const std::string& detail) {
    throw std::invalid_argument("invalid TackleEvent field '" + field + "': " + detail);
}
}  // namespace

void validate_event(const TackleEvent& e) {
    if (e.season_idx < 0) reject("season_idx", "negative");
    if (e.round < 1) reject("round", "must be >= 1");
    if (e.team_idx < 0) reject("team_idx", "negative");
    if (e.opponent_idx < 0) reject("opponent_idx", "negative");
    if (e.team_idx == e.opponent_idx) reject("opponent_idx", "team playing itself");
    if (e.tackle_number < 1 || e.tackle_number > 6)
        reject("tackle_number", std::to_string(e.tackle_number) + " outside [1,6]");
    if (!(e.pos_x >= 0.0 && e.pos_x <= 100.0))
        reject("pos_x", std::to_string(e.pos_x) + " outside [0,100]");
    if (!(e.pos_y >= 0.0 && e.pos_y <= 70.0))
        reject("pos_y", std::to_string(e.pos_y) + " outside [0,70]");
    if (!(e.time_remaining >= 0.0 && e.time_remaining <= 4800.0))
        reject("time_remaining", std::to_string(e.time_remaining) + " outside [0,4800]");
    if (!std::isfinite(e.score_diff)) reject("score_diff", "not finite");
    if (!std::isfinite(e.meters_gained)) reject("meters_gained", "not finite");
    if (e.try_this_tackle && !e.try_this_set)
        reject("try_this_set", "try_this_tackle implies try_this_set");
    if (e.final_score_for < 0.0) reject("final_score_for", "negative");
    if (e.final_score_against < 0.0) reject("final_score_against", "negative");
    const bool won = e.final_score_for > e.final_score_against;
    if (won != e.possessing_team_won)
        reject("possessing_team_won", "inconsistent with final scores");
}

std::vector<double> season_team_onehot(int season_idx, int team_idx, const EncodingConfig& cfg) {
    if (season_idx < 0 || season_idx >= cfg.n_seasons)
        throw std::invalid_argument("season index " + std::to_string(season_idx) +
                                    " outside vocabulary of " + std::to_string(cfg.n_seasons));
    if (team_idx < 0 || team_idx >= cfg.n_teams)
        throw std::invalid_argument("team index " + std::to_string(team_idx) +
                                    " outside vocabulary of " + std::to_string(cfg.n_teams));
    std::vector<double> v(static_cast<std::size_t>(cfg.n_seasons + cfg.n_teams), 0.0);
    v[static_cast<std::size_t>(season_idx)] = 1.0;
    v[static_cast<std::size_t>(cfg.n_seasons + team_idx)] = 1.0;
    return v;
}

std::array<double, 7> tackle_flag_onehot(int tackle_number, bool back_to_back) {
    if (tackle_number < 1 || tackle_number > 6)
        throw std::invalid_argument("tackle number " + std::to_string(tackle_number) +
                                    " outside [1,6]");
    std::array<double, 7> v{};
    v[static_cast<std::size_t>(tackle_number - 1)] = 1.0;
    v[6] = back_to_back ? 1.0 : 0.0;
    return v;
}

EncodedExample encode_event(const TackleEvent& e, const EncodingConfig& cfg) {
    validate_event(e);
    EncodedExample ex;
    ex.team_indicator = season_team_onehot(e.season_idx, e.team_idx, cfg);
    ex.opponent_indicator = season_team_onehot(e.season_idx, e.opponent_idx, cfg);
    ex.tackle_indicator = tackle_flag_onehot(e.tackle_number, e.back_to_back);
    ex.position_raw = {e.pos_x / cfg.field_x, e.pos_y / cfg.field_y};
    ex.dense_context = {e.time_remaining / cfg.game_seconds, e.score_diff / cfg.score_scale};
    ex.target.meters = e.meters_gained;
    ex.target.score_for = e.final_score_for;
    ex.target.score_against = e.final_score_against;
    ex.target.try_tackle = e.try_this_tackle;
    ex.target.try_set = e.try_this_set;
    ex.target.won = e.possessing_team_won;
    ex.season_slot = static_cast<std::size_t>(e.season_idx);
    ex.team_slot = static_cast<std::size_t>(cfg.n_seasons + e.team_idx);
    ex.opponent_season_slot = static_cast<std::size_t>(e.season_idx);
    ex.opponent_slot = static_cast<std::size_t>(cfg.n_seasons + e.opponent_idx);
    ex.tackle_slot = static_cast<std::size_t>(e.tackle_number - 1);
    ex.back_to_back = e.back_to_back;
    return ex;
}

std::vector<EncodedExample> encode_events(const std::vector<TackleEvent>& events,
                                          const EncodingConfig& cfg) {
    std::vector<EncodedExample> out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back(encode_event(e, cfg));
    return out;
}

EncodingConfig build_vocab(const std::vector<TackleEvent>& events) {
    if (events.empty()) throw std::invalid_argument("build_vocab: empty dataset");
    int max_season = 0;
    int max_team = 0;
    for (const auto& e : events) {
        max_season = std::max(max_season, e.season_idx);
        max_team = std::max({max_team, e.team_idx, e.opponent_idx});
    }
    EncodingConfig cfg;
    cfg.n_seasons = max_season + 1;
    cfg.n_teams = max_team + 1;
    return cfg;
}

DecodedContext decode_example(const EncodedExample& ex, const EncodingConfig& cfg) {
    DecodedContext d;
    d.season_idx = static_cast<int>(ex.season_slot);
    d.team_idx = static_cast<int>(ex.team_slot) - cfg.n_seasons;
    d.opponent_idx = static_cast<int>(ex.opponent_slot) - cfg.n_seasons;
    d.tackle_number = static_cast<int>(ex.tackle_slot) + 1;
    d.back_to_back = ex.back_to_back;
    d.pos_x = ex.position_raw[0] * cfg.field_x;
    d.pos_y = ex.position_raw[1] * cfg.field_y;
    d.time_remaining = ex.dense_context[0] * cfg.game_seconds;
    d.score_diff = ex.dense_context[1] * cfg.score_scale;
    return d;
}

std::vector<double> flatten_context(const EncodedExample& ex) {
    std::vector<double> v;
    v.reserve(ex.team_indicator.size() * 2 + 7 + 2 + 2);
    v.insert(v.end(), ex.team_indicator.begin(), ex.team_indicator.end());
    v.insert(v.end(), ex.opponent_indicator.begin(), ex.opponent_indicator.end());
    v.insert(v.end(), ex.tackle_indicator.begin(), ex.tackle_indicator.end());
    v.insert(v.end(), ex.position_raw.begin(), ex.position_raw.end());
    v.insert(v.end(), ex.dense_context.begin(), ex.dense_context.end());
    return v;
}

std::size_t flat_context_width(const EncodingConfig& cfg) {
    return 2 * static_cast<std::size_t>(cfg.n_seasons + cfg.n_teams) + 7 + 2 + 2;
}

}  // namespace tryline
