#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "tryline/features.hpp"
#include "tryline/predictor.hpp"

namespace tryline {

struct TeamProfile {
    double off_strength = 0.0;
    double def_strength = 0.0;
    double run_bias = 0.0;  // per-team intercept offset on the run class
};

// Fully specified generator: every probability it uses is available in closed
// form, so it doubles as the verification oracle for the trained model.
struct LeagueSpec {
    int n_teams = 16;
    int n_seasons = 1;
    std::uint64_t seed = 1;
    std::vector<TeamProfile> teams;

    // Clock. Each tackle consumes a fixed slice so the set recursion can
    // advance time exactly; nothing else consumes clock.
    double game_seconds = 4800.0;
    double seconds_per_tackle = 18.0;

    // Meters gained on a non-scoring run: Normal(mean, sd), the landing spot
    // clamped into [x_min, x_max].
    double gain_base = 8.0;
    double gain_center_bonus = 2.0;  // peaks mid-pitch, fades at the edges
    double gain_strength_scale = 2.0;
    double gain_sd = 6.0;

    // Try-on-this-tackle logit.
    double try_base = -6.5;
    double try_x_coef = 4.5;
    double try_tackle_coef = 0.15;
    double try_strength_scale = 1.0;
    double try_late_boost = 0.8;  // x (1 - time/game_seconds): defenses tire

    double try_points = 4.0;
    double conversion_points = 2.0;
    double conversion_prob = 0.75;

    // Last-tackle policy scores over (x/100, diff/50, time/game_seconds),
    // class order run / offensive kick / defensive kick.
    std::array<double, 3> policy_base{-0.5, -1.6, 2.4};
    std::array<double, 3> policy_x{1.6, 2.0, -4.5};
    std::array<double, 3> policy_diff{0.4, 0.0, -0.4};
    std::array<double, 3> policy_time{0.0, 0.3, 0.4};

    // Kicks and restarts (outcome-only fidelity).
    double offensive_kick_mean = 18.0;
    double offensive_kick_sd = 5.0;
    double offensive_kick_regain = 0.22;
    double defensive_kick_mean = 35.0;
    double defensive_kick_sd = 8.0;
    double kickoff_x = 30.0;
    double x_min = 0.5;
    double x_max = 99.5;

    // Team generation (make_league).
    double strength_sd = 0.25;
    double run_bias_sd = 0.5;

    void validate() const;
};

// Teams drawn from seeded normals on the strength/bias scales above.
LeagueSpec make_league(int n_teams, int n_seasons, std::uint64_t seed);

// Generator formulas, exposed for oracle checks.
double try_probability(const LeagueSpec& spec, double x, int tackle, double time_remaining,
                       double off_strength, double def_strength);
double gain_mean(const LeagueSpec& spec, double x, double off_strength, double def_strength);
std::array<double, 3> policy_probabilities(const LeagueSpec& spec, double run_bias, double x,
                                           double score_diff, double time_remaining);

std::vector<TackleEvent> simulate_match(const LeagueSpec& spec, int season, int round, int home,
                                        int away, std::mt19937_64& rng);
// Double round-robin truncated to 24 games per team; rounds labeled from 1.
std::vector<TackleEvent> simulate_season(const LeagueSpec& spec, int season = 0);
std::vector<TackleEvent> simulate_league(const LeagueSpec& spec);  // all seasons

// Remainder-of-set simulation from a context, sharing the per-tackle dynamics
// with simulate_match. Returns whether a try was scored before the set ended.
bool simulate_set_remainder(const LeagueSpec& spec, const TackleEvent& context,
                            std::mt19937_64& rng);

struct GroundTruth {
    double ex_try_tackle = 0.0;
    double ex_try_set = 0.0;
    std::array<double, 3> play_probs{};
};

// Closed-form / exact-recursion generator probabilities for a context.
GroundTruth ground_truth(const LeagueSpec& spec, const TackleEvent& context);
// Same, with team strengths and policy bias at the league average (zero);
// this is the situation-only baseline that value-over-average compares to.
GroundTruth ground_truth_league_average(const LeagueSpec& spec, const TackleEvent& context);

// Predictor backed by the generator itself. With league_average = true it
// ignores team identity, which is the baseline DVOA wants.
class OraclePredictor final : public Predictor {
public:
    OraclePredictor(LeagueSpec spec, bool league_average);

    double ex_try_set(const TackleEvent& e) const override;
    double ex_try_tackle(const TackleEvent& e) const override;
    double win_probability(const TackleEvent& e) const override;
    ScalarMixture meters_marginal(const TackleEvent& e) const override;
    ScalarMixture score_diff_marginal(const TackleEvent& e) const override;
    bool has_decision_model() const override { return true; }
    std::array<double, 3> play_probabilities(const TackleEvent& e) const override;

    const LeagueSpec& spec() const { return spec_; }

private:
    GroundTruth truth(const TackleEvent& e) const;
    LeagueSpec spec_;
    bool league_average_;
};

}  // namespace tryline
