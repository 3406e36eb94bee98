#include "tryline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "tryline/nn.hpp"

namespace tryline {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t match_seed(std::uint64_t base, int season, int round, int index) {
    std::uint64_t s = splitmix64(base ^ 0x6d61746368ULL);
    s = splitmix64(s ^ static_cast<std::uint64_t>(season + 1));
    s = splitmix64(s ^ (static_cast<std::uint64_t>(round + 1) << 20));
    s = splitmix64(s ^ (static_cast<std::uint64_t>(index + 1) << 40));
    return s;
}

std::array<double, 3> softmax3(std::array<double, 3> s) {
    const double m = std::max({s[0], s[1], s[2]});
    double sum = 0.0;
    for (double& v : s) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : s) v /= sum;
    return s;
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double phi_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }
double phi_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

// Gauss-Legendre nodes/weights on [-1, 1], by Newton iteration on P_n.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int n) : nodes(n), weights(n) {
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
                }
                pp = n * (x * p0 - p1) / (x * x - 1.0);
                const double dx = p0 / pp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
            weights[n - 1 - i] = weights[i];
        }
    }
};

const GaussLegendre& quadrature_rule() {
    static const GaussLegendre rule(32);
    return rule;
}

}  // namespace

void LeagueSpec::validate() const {
    if (n_teams < 2) throw std::invalid_argument("LeagueSpec: need at least 2 teams");
    if (n_seasons < 1) throw std::invalid_argument("LeagueSpec: need at least 1 season");
    if (teams.size() != static_cast<std::size_t>(n_teams)) {
        throw std::invalid_argument("LeagueSpec: team profile count " +
                                    std::to_string(teams.size()) + " != n_teams " +
                                    std::to_string(n_teams));
    }
    if (!(gain_sd > 0.0) || !(seconds_per_tackle > 0.0) || !(game_seconds > 0.0)) {
        throw std::invalid_argument("LeagueSpec: scales must be positive");
    }
    if (!(x_min > 0.0 && x_min < x_max && x_max < 100.0)) {
        throw std::invalid_argument("LeagueSpec: bad field clamp bounds");
    }
    for (const auto& t : teams) {
        if (!std::isfinite(t.off_strength) || !std::isfinite(t.def_strength) ||
            !std::isfinite(t.run_bias)) {
            throw std::invalid_argument("LeagueSpec: non-finite team profile");
        }
    }
}

LeagueSpec make_league(int n_teams, int n_seasons, std::uint64_t seed) {
    LeagueSpec spec;
    spec.n_teams = n_teams;
    spec.n_seasons = n_seasons;
    spec.seed = seed;
    std::mt19937_64 rng(splitmix64(seed ^ 0x6c6561677565ULL));
    std::normal_distribution<double> strength(0.0, spec.strength_sd);
    std::normal_distribution<double> bias(0.0, spec.run_bias_sd);
    spec.teams.resize(static_cast<std::size_t>(n_teams));
    for (auto& t : spec.teams) {
        t.off_strength = strength(rng);
        t.def_strength = strength(rng);
        t.run_bias = bias(rng);
    }
    spec.validate();
    return spec;
}

double try_probability(const LeagueSpec& spec, double x, int tackle, double time_remaining,
                       double off_strength, double def_strength) {
    const double logit = spec.try_base + spec.try_x_coef * (x / 100.0) +
                         spec.try_tackle_coef * ((tackle - 3.5) / 2.5) +
                         spec.try_strength_scale * (off_strength - def_strength) +
                         spec.try_late_boost * (1.0 - time_remaining / spec.game_seconds);
    return sigmoid(logit);
}

double gain_mean(const LeagueSpec& spec, double x, double off_strength, double def_strength) {
    return spec.gain_base + spec.gain_center_bonus * (1.0 - std::abs(x - 50.0) / 50.0) +
           spec.gain_strength_scale * (off_strength - def_strength);
}

std::array<double, 3> policy_probabilities(const LeagueSpec& spec, double run_bias, double x,
                                           double score_diff, double time_remaining) {
    std::array<double, 3> s{};
    for (int c = 0; c < 3; ++c) {
        s[c] = spec.policy_base[c] + spec.policy_x[c] * (x / 100.0) +
               spec.policy_diff[c] * (score_diff / 50.0) +
               spec.policy_time[c] * (time_remaining / spec.game_seconds);
    }
    s[0] += run_bias;
    return softmax3(s);
}

namespace {

// In-progress set state; time is the clock at the start of the current tackle.
struct SetCursor {
    double x = 0.0;
    int tackle = 1;
    double time = 0.0;
    double score_diff = 0.0;
    int team = 0;
    int opponent = 0;
    bool back_to_back = false;
};

struct TackleOutcome {
    PlayChoice choice = PlayChoice::kRun;
    bool try_scored = false;
    bool set_continues = false;
    double meters = 0.0;
    bool possession_retained = false;  // offensive-kick regain
    double next_attacking_x = 0.0;     // for whoever plays the next set
};

// One tackle under the generator dynamics. Shared by the match simulation and
// the remainder-of-set oracle so the two can never drift apart. Draw order:
// policy (tackle 6), try, then meters / kick distance / regain.
TackleOutcome advance_tackle(const LeagueSpec& spec, SetCursor& cur, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& off = spec.teams[static_cast<std::size_t>(cur.team)];
    const auto& def = spec.teams[static_cast<std::size_t>(cur.opponent)];

    TackleOutcome out;
    out.choice = PlayChoice::kRun;
    if (cur.tackle == 6) {
        const auto probs = policy_probabilities(spec, off.run_bias, cur.x, cur.score_diff, cur.time);
        const double u = unit(rng);
        out.choice = u < probs[0]              ? PlayChoice::kRun
                     : u < probs[0] + probs[1] ? PlayChoice::kOffensiveKick
                                               : PlayChoice::kDefensiveKick;
    }

    if (out.choice == PlayChoice::kRun) {
        const double p_try =
            try_probability(spec, cur.x, cur.tackle, cur.time, off.off_strength, def.def_strength);
        if (unit(rng) < p_try) {
            out.try_scored = true;
            out.meters = 100.0 - cur.x;
            return out;
        }
        std::normal_distribution<double> gain(gain_mean(spec, cur.x, off.off_strength,
                                                        def.def_strength),
                                              spec.gain_sd);
        const double landed = std::clamp(cur.x + gain(rng), spec.x_min, spec.x_max);
        out.meters = landed - cur.x;
        if (cur.tackle < 6) {
            out.set_continues = true;
            cur.x = landed;
            cur.tackle += 1;
        } else {
            out.next_attacking_x = 100.0 - landed;  // handover
        }
        return out;
    }

    const bool offensive = out.choice == PlayChoice::kOffensiveKick;
    std::normal_distribution<double> dist(offensive ? spec.offensive_kick_mean
                                                    : spec.defensive_kick_mean,
                                          offensive ? spec.offensive_kick_sd
                                                    : spec.defensive_kick_sd);
    const double landed = std::clamp(cur.x + dist(rng), spec.x_min, spec.x_max);
    if (offensive && unit(rng) < spec.offensive_kick_regain) {
        out.possession_retained = true;
        out.next_attacking_x = landed;
    } else {
        out.next_attacking_x = 100.0 - landed;
    }
    return out;
}

}  // namespace

std::vector<TackleEvent> simulate_match(const LeagueSpec& spec, int season, int round, int home,
                                        int away, std::mt19937_64& rng) {
    spec.validate();
    if (home == away || home < 0 || away < 0 || home >= spec.n_teams || away >= spec.n_teams) {
        throw std::invalid_argument("simulate_match: bad team indices");
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::string match_id = "s" + std::to_string(season) + "r" + std::to_string(round) + "-" +
                                 std::to_string(home) + "v" + std::to_string(away);

    std::vector<TackleEvent> events;
    events.reserve(static_cast<std::size_t>(spec.game_seconds / spec.seconds_per_tackle) + 8);

    double score_home = 0.0;
    double score_away = 0.0;
    auto score_of = [&](int team) -> double& { return team == home ? score_home : score_away; };

    SetCursor cur;
    cur.team = home;  // home receives the kickoff
    cur.opponent = away;
    cur.x = spec.kickoff_x;
    cur.tackle = 1;
    cur.back_to_back = false;
    cur.time = spec.game_seconds;

    std::size_t set_begin = 0;  // first event index of the in-progress set

    auto close_set = [&](bool try_scored) {
        if (try_scored) {
            for (std::size_t i = set_begin; i < events.size(); ++i) events[i].try_this_set = true;
        }
        set_begin = events.size();
    };

    while (cur.time > 0.0) {
        cur.score_diff = score_of(cur.team) - score_of(cur.opponent);

        TackleEvent e;
        e.match_id = match_id;
        e.season_idx = season;
        e.round = round;
        e.team_idx = cur.team;
        e.opponent_idx = cur.opponent;
        e.tackle_number = cur.tackle;
        e.back_to_back = cur.back_to_back;
        e.pos_x = cur.x;
        e.pos_y = 5.0 + 60.0 * unit(rng);
        e.time_remaining = cur.time;
        e.score_diff = cur.score_diff;

        const auto out = advance_tackle(spec, cur, rng);
        e.meters_gained = out.meters;
        e.try_this_tackle = out.try_scored;
        if (e.tackle_number == 6) e.last_tackle_play = out.choice;
        events.push_back(e);

        cur.time -= spec.seconds_per_tackle;

        if (out.set_continues) continue;

        close_set(out.try_scored);
        if (out.try_scored) {
            double& s = score_of(cur.team);
            s += spec.try_points;
            if (unit(rng) < spec.conversion_prob) s += spec.conversion_points;
            // conceding team restarts
            std::swap(cur.team, cur.opponent);
            cur.x = spec.kickoff_x;
            cur.back_to_back = false;
        } else if (out.possession_retained) {
            cur.x = out.next_attacking_x;
            cur.back_to_back = true;
        } else {
            std::swap(cur.team, cur.opponent);
            cur.x = out.next_attacking_x;
            cur.back_to_back = false;
        }
        cur.tackle = 1;
    }
    close_set(false);

    for (auto& e : events) {
        const double fs = score_of(e.team_idx);
        const double fa = score_of(e.opponent_idx);
        e.final_score_for = fs;
        e.final_score_against = fa;
        e.possessing_team_won = fs > fa;
    }
    return events;
}

std::vector<TackleEvent> simulate_season(const LeagueSpec& spec, int season) {
    spec.validate();
    if (spec.n_teams % 2 != 0) {
        throw std::invalid_argument("simulate_season: odd team count has no full schedule");
    }
    const int n = spec.n_teams;
    const int cycle = n - 1;                     // rounds per single round-robin
    const int rounds = std::min(2 * cycle, 24);  // 24 games per team at most

    std::vector<TackleEvent> events;
    for (int r = 0; r < rounds; ++r) {
        const int base = r % cycle;
        const bool second_cycle = r >= cycle;
        for (int i = 0; i < n / 2; ++i) {
            // circle method with team n-1 fixed
            int a = i == 0 ? n - 1 : (base + i) % cycle;
            int b = (base + cycle - i) % cycle;
            if (i == 0) b = base % cycle;
            int home = a;
            int away = b;
            if ((r + i) % 2 == 0) std::swap(home, away);
            if (second_cycle) std::swap(home, away);
            std::mt19937_64 rng(match_seed(spec.seed, season, r, i));
            auto match = simulate_match(spec, season, r + 1, home, away, rng);
            events.insert(events.end(), match.begin(), match.end());
        }
    }
    return events;
}

std::vector<TackleEvent> simulate_league(const LeagueSpec& spec) {
    std::vector<TackleEvent> events;
    for (int s = 0; s < spec.n_seasons; ++s) {
        auto season = simulate_season(spec, s);
        events.insert(events.end(), season.begin(), season.end());
    }
    return events;
}

bool simulate_set_remainder(const LeagueSpec& spec, const TackleEvent& context,
                            std::mt19937_64& rng) {
    SetCursor cur;
    cur.x = context.pos_x;
    cur.tackle = context.tackle_number;
    cur.time = context.time_remaining;
    cur.score_diff = context.score_diff;
    cur.team = context.team_idx;
    cur.opponent = context.opponent_idx;
    cur.back_to_back = context.back_to_back;
    while (cur.time > 0.0) {
        const auto out = advance_tackle(spec, cur, rng);
        if (out.try_scored) return true;
        if (!out.set_continues) return false;
        cur.time -= spec.seconds_per_tackle;
    }
    return false;
}

namespace {

// exTrySet recursion. Level tables hold f_s(x) = P(try at tackle s or later
// of this set) on an x grid; level s feeds level s-1 through the clamped
// Gaussian transition, integrated with Gauss-Legendre plus exact endpoint
// masses for the clamp.
constexpr int kGridPoints = 241;

struct SetTruthTables {
    std::array<std::array<double, kGridPoints>, 7> level{};  // index 1..6 used
};

double grid_x(const LeagueSpec& spec, int i) {
    return spec.x_min + (spec.x_max - spec.x_min) * i / (kGridPoints - 1.0);
}

double interp(const LeagueSpec& spec, const std::array<double, kGridPoints>& f, double x) {
    const double t = (std::clamp(x, spec.x_min, spec.x_max) - spec.x_min) /
                     (spec.x_max - spec.x_min) * (kGridPoints - 1.0);
    const int i = std::min(kGridPoints - 2, static_cast<int>(t));
    const double w = t - i;
    return f[static_cast<std::size_t>(i)] * (1.0 - w) + f[static_cast<std::size_t>(i + 1)] * w;
}

double clamped_gain_expectation(const LeagueSpec& spec,
                                const std::array<double, kGridPoints>& next, double x,
                                double mean) {
    const double sd = spec.gain_sd;
    const double za = (spec.x_min - x - mean) / sd;
    const double zb = (spec.x_max - x - mean) / sd;
    double acc = phi_cdf(za) * next.front() + (1.0 - phi_cdf(zb)) * next.back();
    const double lo = std::max(za, -10.0);
    const double hi = std::min(zb, 10.0);
    if (hi > lo) {
        const auto& rule = quadrature_rule();
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const double z = mid + half * rule.nodes[q];
            acc += half * rule.weights[q] * phi_pdf(z) * interp(spec, next, x + mean + sd * z);
        }
    }
    return acc;
}

SetTruthTables build_set_tables(const LeagueSpec& spec, double time_at_t6, double score_diff,
                                double off, double def, double run_bias) {
    SetTruthTables tables;
    // tackle 6: try only on a run play
    if (time_at_t6 > 0.0) {
        for (int i = 0; i < kGridPoints; ++i) {
            const double x = grid_x(spec, i);
            const double p_run = policy_probabilities(spec, run_bias, x, score_diff, time_at_t6)[0];
            tables.level[6][static_cast<std::size_t>(i)] =
                p_run * try_probability(spec, x, 6, time_at_t6, off, def);
        }
    }
    for (int s = 5; s >= 1; --s) {
        const double time_s = time_at_t6 - spec.seconds_per_tackle * (s - 6);  // earlier => larger
        if (time_s <= 0.0) continue;  // tackle never starts
        const auto& next = tables.level[static_cast<std::size_t>(s + 1)];
        for (int i = 0; i < kGridPoints; ++i) {
            const double x = grid_x(spec, i);
            const double p = try_probability(spec, x, s, time_s, off, def);
            const double cont = clamped_gain_expectation(spec, next, x, gain_mean(spec, x, off, def));
            tables.level[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)] =
                p + (1.0 - p) * cont;
        }
    }
    return tables;
}

GroundTruth ground_truth_impl(const LeagueSpec& spec, const TackleEvent& e, double off, double def,
                              double run_bias) {
    validate_event(e);
    GroundTruth gt;
    gt.play_probs = policy_probabilities(spec, run_bias, e.pos_x, e.score_diff, e.time_remaining);
    const double p_try =
        try_probability(spec, e.pos_x, e.tackle_number, e.time_remaining, off, def);
    gt.ex_try_tackle = e.tackle_number == 6 ? gt.play_probs[0] * p_try : p_try;

    const double time_at_t6 =
        e.time_remaining - spec.seconds_per_tackle * (6 - e.tackle_number);
    const auto tables = build_set_tables(spec, time_at_t6, e.score_diff, off, def, run_bias);
    if (e.tackle_number == 6) {
        gt.ex_try_set = gt.ex_try_tackle;
    } else {
        const auto& next = tables.level[static_cast<std::size_t>(e.tackle_number + 1)];
        const double cont =
            clamped_gain_expectation(spec, next, e.pos_x, gain_mean(spec, e.pos_x, off, def));
        gt.ex_try_set = p_try + (1.0 - p_try) * cont;
    }
    return gt;
}

}  // namespace

GroundTruth ground_truth(const LeagueSpec& spec, const TackleEvent& e) {
    spec.validate();
    if (e.team_idx >= spec.n_teams || e.opponent_idx >= spec.n_teams) {
        throw std::invalid_argument("ground_truth: team index outside the league");
    }
    const auto& off = spec.teams[static_cast<std::size_t>(e.team_idx)];
    const auto& def = spec.teams[static_cast<std::size_t>(e.opponent_idx)];
    return ground_truth_impl(spec, e, off.off_strength, def.def_strength, off.run_bias);
}

GroundTruth ground_truth_league_average(const LeagueSpec& spec, const TackleEvent& e) {
    spec.validate();
    return ground_truth_impl(spec, e, 0.0, 0.0, 0.0);
}

OraclePredictor::OraclePredictor(LeagueSpec spec, bool league_average)
    : spec_(std::move(spec)), league_average_(league_average) {
    spec_.validate();
}

GroundTruth OraclePredictor::truth(const TackleEvent& e) const {
    return league_average_ ? ground_truth_league_average(spec_, e) : ground_truth(spec_, e);
}

double OraclePredictor::ex_try_set(const TackleEvent& e) const { return truth(e).ex_try_set; }

double OraclePredictor::ex_try_tackle(const TackleEvent& e) const {
    return truth(e).ex_try_tackle;
}

double OraclePredictor::win_probability(const TackleEvent&) const {
    throw std::runtime_error("OraclePredictor: win probability is not modeled by the generator");
}

ScalarMixture OraclePredictor::meters_marginal(const TackleEvent& e) const {
    // no-try carry distribution
    const double off = league_average_ ? 0.0 : spec_.teams[static_cast<std::size_t>(e.team_idx)].off_strength;
    const double def = league_average_ ? 0.0 : spec_.teams[static_cast<std::size_t>(e.opponent_idx)].def_strength;
    return ScalarMixture{{1.0}, {gain_mean(spec_, e.pos_x, off, def)}, {spec_.gain_sd}};
}

ScalarMixture OraclePredictor::score_diff_marginal(const TackleEvent&) const {
    throw std::runtime_error("OraclePredictor: scoreline distribution is not modeled in closed form");
}

std::array<double, 3> OraclePredictor::play_probabilities(const TackleEvent& e) const {
    return truth(e).play_probs;
}

}  // namespace tryline
