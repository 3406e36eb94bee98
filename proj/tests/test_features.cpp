#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "tryline/features.hpp"

using namespace tryline;

namespace {

TackleEvent sample_event() {
    TackleEvent e;
    e.match_id = "m1";
    e.season_idx = 2;
    e.round = 7;
    e.team_idx = 3;
    e.opponent_idx = 11;
    e.tackle_number = 4;
    e.back_to_back = true;
    e.pos_x = 62.5;
    e.pos_y = 21.0;
    e.time_remaining = 1234.0;
    e.score_diff = -6.0;
    e.meters_gained = 8.5;
    e.try_this_tackle = false;
    e.try_this_set = true;
    e.possessing_team_won = false;
    e.final_score_for = 12;
    e.final_score_against = 18;
    return e;
}

EncodingConfig league_cfg() {
    EncodingConfig cfg;
    cfg.n_seasons = 4;
    cfg.n_teams = 16;
    return cfg;
}

}  // namespace

TEST_CASE("season_team_onehot positions") {
    EncodingConfig tiny;
    tiny.n_seasons = 1;
    tiny.n_teams = 2;
    CHECK(season_team_onehot(0, 0, tiny) == std::vector<double>{1, 1, 0});

    auto cfg = league_cfg();
    auto v = season_team_onehot(3, 7, cfg);
    REQUIRE(v.size() == 20);
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(v[i] == ((i == 3 || i == 11) ? 1.0 : 0.0));
    }
    auto w = season_team_onehot(0, 15, cfg);
    CHECK(w[0] == 1.0);
    CHECK(w[19] == 1.0);

    CHECK_THROWS_AS(season_team_onehot(4, 0, cfg), std::invalid_argument);
    CHECK_THROWS_AS(season_team_onehot(0, 16, cfg), std::invalid_argument);
    CHECK_THROWS_AS(season_team_onehot(-1, 0, cfg), std::invalid_argument);
}

TEST_CASE("tackle_flag_onehot layout") {
    CHECK(tackle_flag_onehot(1, false) == std::array<double, 7>{1, 0, 0, 0, 0, 0, 0});
    CHECK(tackle_flag_onehot(6, true) == std::array<double, 7>{0, 0, 0, 0, 0, 1, 1});
    CHECK(tackle_flag_onehot(3, false) == std::array<double, 7>{0, 0, 1, 0, 0, 0, 0});
    CHECK_THROWS_AS(tackle_flag_onehot(0, false), std::invalid_argument);
    CHECK_THROWS_AS(tackle_flag_onehot(7, false), std::invalid_argument);
}

TEST_CASE("encode_event normalization and indicator structure") {
    auto cfg = league_cfg();
    auto e = sample_event();
    e.pos_x = 50;
    e.pos_y = 35;
    auto ex = encode_event(e, cfg);
    CHECK(ex.position_raw[0] == doctest::Approx(0.5));
    CHECK(ex.position_raw[1] == doctest::Approx(0.5));

    e.pos_x = 0;
    e.pos_y = 0;
    e.time_remaining = 4800;
    e.score_diff = 0;
    ex = encode_event(e, cfg);
    CHECK(ex.position_raw[0] == 0.0);
    CHECK(ex.position_raw[1] == 0.0);
    CHECK(ex.dense_context[0] == doctest::Approx(1.0));
    CHECK(ex.dense_context[1] == doctest::Approx(0.0));

    int team_ones = 0, opp_ones = 0, tackle_ones = 0;
    for (double v : ex.team_indicator) team_ones += v == 1.0;
    for (double v : ex.opponent_indicator) opp_ones += v == 1.0;
    for (int i = 0; i < 6; ++i) tackle_ones += ex.tackle_indicator[i] == 1.0;
    CHECK(team_ones == 2);
    CHECK(opp_ones == 2);
    CHECK(tackle_ones == 1);
    CHECK(ex.target.try_set);
    CHECK(ex.target.score_against == 18);
}

TEST_CASE("encode/decode round-trips context fields") {
    auto cfg = league_cfg();
    auto e = sample_event();
    auto d = decode_example(encode_event(e, cfg), cfg);
    CHECK(d.season_idx == e.season_idx);
    CHECK(d.team_idx == e.team_idx);
    CHECK(d.opponent_idx == e.opponent_idx);
    CHECK(d.tackle_number == e.tackle_number);
    CHECK(d.back_to_back == e.back_to_back);
    CHECK(d.pos_x == doctest::Approx(e.pos_x).epsilon(1e-9));
    CHECK(d.pos_y == doctest::Approx(e.pos_y).epsilon(1e-9));
    CHECK(d.time_remaining == doctest::Approx(e.time_remaining).epsilon(1e-9));
    CHECK(d.score_diff == doctest::Approx(e.score_diff).epsilon(1e-9));
}

TEST_CASE("encode_event rejects invariant violations by field") {
    auto cfg = league_cfg();
    auto e = sample_event();
    e.tackle_number = 7;
    CHECK_THROWS_WITH_AS(encode_event(e, cfg), doctest::Contains("tackle_number"),
                         std::invalid_argument);
    e = sample_event();
    e.pos_x = 101;
    CHECK_THROWS_WITH_AS(encode_event(e, cfg), doctest::Contains("pos_x"), std::invalid_argument);
    e = sample_event();
    e.try_this_tackle = true;
    e.try_this_set = false;
    CHECK_THROWS_WITH_AS(encode_event(e, cfg), doctest::Contains("try_this_set"),
                         std::invalid_argument);
    e = sample_event();
    e.possessing_team_won = true;  // but final scores say lost
    CHECK_THROWS_WITH_AS(encode_event(e, cfg), doctest::Contains("possessing_team_won"),
                         std::invalid_argument);
}

TEST_CASE("build_vocab uses max index + 1") {
    TackleEvent a = sample_event();
    a.season_idx = 0;
    a.team_idx = 0;
    a.opponent_idx = 1;
    auto cfg = build_vocab({a});
    CHECK(cfg.n_seasons == 1);
    CHECK(cfg.n_teams == 2);

    TackleEvent b = sample_event();
    b.season_idx = 0;
    b.team_idx = 0;
    b.opponent_idx = 5;
    cfg = build_vocab({b});
    CHECK(cfg.n_teams == 6);

    CHECK_THROWS_AS(build_vocab({}), std::invalid_argument);
}

TEST_CASE("flatten_context width and content") {
    auto cfg = league_cfg();
    auto ex = encode_event(sample_event(), cfg);
    auto flat = flatten_context(ex);
    CHECK(flat.size() == flat_context_width(cfg));
    CHECK(flat.size() == 2 * 20 + 7 + 2 + 2);
    // last two entries are the scaled game context
    CHECK(flat[flat.size() - 1] == doctest::Approx(-6.0 / 50.0));
    CHECK(flat[flat.size() - 2] == doctest::Approx(1234.0 / 4800.0));
}
