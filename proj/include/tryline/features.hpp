#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace tryline {

enum class PlayChoice { kRun = 0, kOffensiveKick = 1, kDefensiveKick = 2 };

const char* play_choice_name(PlayChoice c);
PlayChoice play_choice_from_name(const std::string& name);

// Observed outcomes attached to a tackle: meters on the next carry, try on
// this tackle / at any point in the remainder of the set, match result and
// final scores from the possessing team's perspective.
struct GameStateTarget {
    double meters = 0.0;
    double score_for = 0.0;
    double score_against = 0.0;
    bool try_tackle = false;
    bool try_set = false;
    bool won = false;
};

// One play-by-play record. Coordinates are attack-normalized: the possessing
// team always moves toward x = 100; y spans [0, 70]. score_diff is possessing
// team minus opponent at the start of the tackle.
struct TackleEvent {
    std::string match_id;
    int season_idx = 0;
    int round = 1;
    int team_idx = 0;
    int opponent_idx = 0;
    int tackle_number = 1;
    bool back_to_back = false;
    double pos_x = 0.0;
    double pos_y = 0.0;
    double time_remaining = 0.0;
    double score_diff = 0.0;
    double meters_gained = 0.0;
    bool try_this_tackle = false;
    bool try_this_set = false;
    bool possessing_team_won = false;
    double final_score_for = 0.0;
    double final_score_against = 0.0;
    std::optional<PlayChoice> last_tackle_play;
};

// Throws std::invalid_argument naming the offending field.
void validate_event(const TackleEvent& e);

struct EncodingConfig {
    int n_seasons = 1;
    int n_teams = 2;
    double field_x = 100.0;
    double field_y = 70.0;
    double game_seconds = 4800.0;
    double score_scale = 50.0;
};

// Model-ready representation: concatenated season+team one-hots, tackle
// one-hot with a back-to-back flag slot, field position both raw (dense) and
// as the sparse-path input, plus scaled game context.
struct EncodedExample {
    std::vector<double> team_indicator;      // length n_seasons + n_teams, two ones
    std::vector<double> opponent_indicator;  // same layout
    std::array<double, 7> tackle_indicator{};
    std::array<double, 2> position_raw{};    // (x / 100, y / 70)
    std::array<double, 2> dense_context{};   // (time / 4800, score_diff / 50)
    GameStateTarget target;

    // Index form of the indicators, used by the embedding-sum fast path.
    std::size_t season_slot = 0;
    std::size_t team_slot = 0;
    std::size_t opponent_season_slot = 0;
    std::size_t opponent_slot = 0;
    std::size_t tackle_slot = 0;
    bool back_to_back = false;
};

std::vector<double> season_team_onehot(int season_idx, int team_idx, const EncodingConfig& cfg);
std::array<double, 7> tackle_flag_onehot(int tackle_number, bool back_to_back);
EncodedExample encode_event(const TackleEvent& e, const EncodingConfig& cfg);
std::vector<EncodedExample> encode_events(const std::vector<TackleEvent>& events,
                                          const EncodingConfig& cfg);

// Vocabulary sizes from max observed index + 1; normalization constants fixed.
EncodingConfig build_vocab(const std::vector<TackleEvent>& events);

// Context fields recovered from an encoded example (normalization inverted).
struct DecodedContext {
    int season_idx = 0;
    int team_idx = 0;
    int opponent_idx = 0;
    int tackle_number = 1;
    bool back_to_back = false;
    double pos_x = 0.0;
    double pos_y = 0.0;
    double time_remaining = 0.0;
    double score_diff = 0.0;
};

DecodedContext decode_example(const EncodedExample& ex, const EncodingConfig& cfg);

// Flat linear-feature view (indicators + raw position + dense context) for
// models that want plain columns instead of embeddings.
std::vector<double> flatten_context(const EncodedExample& ex);
std::size_t flat_context_width(const EncodingConfig& cfg);

}  // namespace tryline
