#include "tryline/io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tryline/mixture.hpp"
#include "tryline/predictor.hpp"

namespace tryline {

using nlohmann::json;

namespace {

const std::set<std::string> kEventKeys = {
    "match_id",      "season_idx",       "round",
    "team_idx",      "opponent_idx",     "tackle_number",
    "back_to_back",  "pos_x",            "pos_y",
    "time_remaining", "score_diff",      "meters_gained",
    "try_this_tackle", "try_this_set",   "possessing_team_won",
    "final_score_for", "final_score_against", "last_tackle_play",
};

const std::set<std::string> kOutcomeKeys = {
    "meters_gained",   "try_this_tackle", "try_this_set",
    "possessing_team_won", "final_score_for", "final_score_against",
};

TackleEvent event_from_json(const json& j, bool require_outcomes) {
    if (!j.is_object()) throw std::runtime_error("event is not a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!kEventKeys.count(key)) throw std::runtime_error("unknown key '" + key + "'");
    }
    for (const auto& key : kEventKeys) {
        if (key == "last_tackle_play") continue;  // optional
        if (!require_outcomes && kOutcomeKeys.count(key)) continue;
        if (!j.contains(key)) throw std::runtime_error("missing required key '" + key + "'");
    }
    TackleEvent e;
    e.match_id = j.at("match_id").get<std::string>();
    e.season_idx = j.at("season_idx").get<int>();
    e.round = j.at("round").get<int>();
    e.team_idx = j.at("team_idx").get<int>();
    e.opponent_idx = j.at("opponent_idx").get<int>();
    e.tackle_number = j.at("tackle_number").get<int>();
    e.back_to_back = j.at("back_to_back").get<bool>();
    e.pos_x = j.at("pos_x").get<double>();
    e.pos_y = j.at("pos_y").get<double>();
    e.time_remaining = j.at("time_remaining").get<double>();
    e.score_diff = j.at("score_diff").get<double>();
    e.meters_gained = j.value("meters_gained", 0.0);
    e.try_this_tackle = j.value("try_this_tackle", false);
    e.try_this_set = j.value("try_this_set", false);
    e.possessing_team_won = j.value("possessing_team_won", false);
    e.final_score_for = j.value("final_score_for", 0.0);
    e.final_score_against = j.value("final_score_against", 0.0);
    if (j.contains("last_tackle_play")) {
        e.last_tackle_play = play_choice_from_name(j.at("last_tackle_play").get<std::string>());
    }
    validate_event(e);
    return e;
}

json event_to_json(const TackleEvent& e) {
    json j;
    j["match_id"] = e.match_id;
    j["season_idx"] = e.season_idx;
    j["round"] = e.round;
    j["team_idx"] = e.team_idx;
    j["opponent_idx"] = e.opponent_idx;
    j["tackle_number"] = e.tackle_number;
    j["back_to_back"] = e.back_to_back;
    j["pos_x"] = e.pos_x;
    j["pos_y"] = e.pos_y;
    j["time_remaining"] = e.time_remaining;
    j["score_diff"] = e.score_diff;
    j["meters_gained"] = e.meters_gained;
    j["try_this_tackle"] = e.try_this_tackle;
    j["try_this_set"] = e.try_this_set;
    j["possessing_team_won"] = e.possessing_team_won;
    j["final_score_for"] = e.final_score_for;
    j["final_score_against"] = e.final_score_against;
    if (e.last_tackle_play) j["last_tackle_play"] = play_choice_name(*e.last_tackle_play);
    return j;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

json parse_file(const std::string& path) {
    auto in = open_input(path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("'" + path + "': " + e.what());
    }
}

}  // namespace

std::vector<TackleEvent> read_events(const std::string& path) {
    auto in = open_input(path);
    std::vector<TackleEvent> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            events.push_back(event_from_json(json::parse(line), /*require_outcomes=*/true));
        } catch (const std::exception& e) {
            throw std::runtime_error("'" + path + "' line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    return events;
}

void write_events(const std::string& path, const std::vector<TackleEvent>& events) {
    auto out = open_output(path);
    for (const auto& e : events) out << event_to_json(e).dump() << '\n';
}

TackleEvent read_event_file(const std::string& path, bool require_outcomes) {
    return event_from_json(parse_file(path), require_outcomes);
}

namespace {

json tensor_to_json(const ParamTensor& t) { return t.values; }

void tensor_from_json(const json& j, ParamTensor& t, const std::string& name) {
    const auto values = j.get<std::vector<double>>();
    if (values.size() != t.size()) {
        throw std::runtime_error("checkpoint section '" + name + "' holds " +
                                 std::to_string(values.size()) + " parameters, expected " +
                                 std::to_string(t.size()));
    }
    t.values = values;
    t.zero_grad();
}

json arch_to_json(const ModelArchitecture& a) {
    return json{{"embedding_dim_team", a.embedding_dim_team},
                {"embedding_dim_tackle", a.embedding_dim_tackle},
                {"spatial_hidden", a.spatial_hidden},
                {"spatial_layers", a.spatial_layers},
                {"trunk_hidden", a.trunk_hidden},
                {"mixtures", a.mixtures}};
}

ModelArchitecture arch_from_json(const json& j) {
    ModelArchitecture a;
    a.embedding_dim_team = j.at("embedding_dim_team").get<int>();
    a.embedding_dim_tackle = j.at("embedding_dim_tackle").get<int>();
    a.spatial_hidden = j.at("spatial_hidden").get<int>();
    a.spatial_layers = j.at("spatial_layers").get<int>();
    a.trunk_hidden = j.at("trunk_hidden").get<int>();
    a.mixtures = j.at("mixtures").get<int>();
    a.validate();
    return a;
}

json encoding_to_json(const EncodingConfig& c) {
    return json{{"n_seasons", c.n_seasons},   {"n_teams", c.n_teams},
                {"field_x", c.field_x},       {"field_y", c.field_y},
                {"game_seconds", c.game_seconds}, {"score_scale", c.score_scale}};
}

EncodingConfig encoding_from_json(const json& j) {
    EncodingConfig c;
    c.n_seasons = j.at("n_seasons").get<int>();
    c.n_teams = j.at("n_teams").get<int>();
    c.field_x = j.at("field_x").get<double>();
    c.field_y = j.at("field_y").get<double>();
    c.game_seconds = j.at("game_seconds").get<double>();
    c.score_scale = j.at("score_scale").get<double>();
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
    json sections;
    sections["embeddings"] = {{"team", tensor_to_json(cp.model.team_embedding)},
                              {"opponent", tensor_to_json(cp.model.opponent_embedding)},
                              {"tackle", tensor_to_json(cp.model.tackle_embedding)}};
    json spatial_w = json::array();
    json spatial_b = json::array();
    for (const auto& w : cp.model.spatial_weights) spatial_w.push_back(tensor_to_json(w));
    for (const auto& b : cp.model.spatial_biases) spatial_b.push_back(tensor_to_json(b));
    sections["spatial"] = {{"w", spatial_w}, {"b", spatial_b}};
    json trunk_w = json::array();
    json trunk_b = json::array();
    for (const auto& w : cp.model.trunk_weights) trunk_w.push_back(tensor_to_json(w));
    for (const auto& b : cp.model.trunk_biases) trunk_b.push_back(tensor_to_json(b));
    sections["trunk"] = {{"w", trunk_w}, {"b", trunk_b}};
    sections["output"] = {{"w", tensor_to_json(cp.model.output_weights)},
                          {"b", tensor_to_json(cp.model.output_bias)}};

    json j;
    j["format_version"] = cp.format_version;
    j["architecture"] = arch_to_json(cp.model.arch);
    j["encoding"] = encoding_to_json(cp.model.encoding);
    j["sections"] = sections;
    if (cp.decision) {
        j["decision"] = {{"version", 1},
                         {"n_features", cp.decision->n_features},
                         {"w", cp.decision->w},
                         {"b", cp.decision->b}};
    }
    j["training"] = {{"seed", cp.meta.seed},
                     {"epochs", cp.meta.epochs},
                     {"final_train_nll", cp.meta.final_train_nll},
                     {"final_val_nll", cp.meta.final_val_nll}};

    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
    const json j = parse_file(path);
    if (!j.contains("format_version")) throw std::runtime_error("checkpoint has no format_version");
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint format_version " + std::to_string(version) +
                                 " unsupported, this build reads version " +
                                 std::to_string(kCheckpointVersion));
    }
    Checkpoint cp;
    cp.format_version = version;
    const auto arch = arch_from_json(j.at("architecture"));
    const auto encoding = encoding_from_json(j.at("encoding"));
    // Shapes come from architecture arithmetic; section sizes must agree.
    cp.model = init_model(arch, encoding, /*seed=*/0);
    const auto& sections = j.at("sections");
    const auto& emb = sections.at("embeddings");
    tensor_from_json(emb.at("team"), cp.model.team_embedding, "embeddings.team");
    tensor_from_json(emb.at("opponent"), cp.model.opponent_embedding, "embeddings.opponent");
    tensor_from_json(emb.at("tackle"), cp.model.tackle_embedding, "embeddings.tackle");
    const auto& spatial = sections.at("spatial");
    if (spatial.at("w").size() != cp.model.spatial_weights.size()) {
        throw std::runtime_error("checkpoint spatial depth mismatch");
    }
    for (std::size_t i = 0; i < cp.model.spatial_weights.size(); ++i) {
        tensor_from_json(spatial.at("w").at(i), cp.model.spatial_weights[i], "spatial.w");
        tensor_from_json(spatial.at("b").at(i), cp.model.spatial_biases[i], "spatial.b");
    }
    const auto& trunk = sections.at("trunk");
    for (std::size_t i = 0; i < cp.model.trunk_weights.size(); ++i) {
        tensor_from_json(trunk.at("w").at(i), cp.model.trunk_weights[i], "trunk.w");
        tensor_from_json(trunk.at("b").at(i), cp.model.trunk_biases[i], "trunk.b");
    }
    tensor_from_json(sections.at("output").at("w"), cp.model.output_weights, "output.w");
    tensor_from_json(sections.at("output").at("b"), cp.model.output_bias, "output.b");

    if (j.contains("decision")) {
        const auto& d = j.at("decision");
        const int dv = d.at("version").get<int>();
        if (dv != 1) {
            throw std::runtime_error("decision head version " + std::to_string(dv) +
                                     " unsupported, this build reads version 1");
        }
        LogisticWeights lw;
        lw.n_features = d.at("n_features").get<std::size_t>();
        lw.w = d.at("w").get<std::vector<double>>();
        const auto b = d.at("b").get<std::vector<double>>();
        if (lw.w.size() != 3 * lw.n_features || b.size() != 3) {
            throw std::runtime_error("decision head parameter count mismatch");
        }
        std::copy(b.begin(), b.end(), lw.b.begin());
        cp.decision = std::move(lw);
    }
    if (j.contains("training")) {
        const auto& t = j.at("training");
        cp.meta.seed = t.value("seed", std::uint64_t{0});
        cp.meta.epochs = t.value("epochs", 0);
        cp.meta.final_train_nll = t.value("final_train_nll", 0.0);
        cp.meta.final_val_nll = t.value("final_val_nll", 0.0);
    }
    return cp;
}

LeagueSpec read_league_spec(const std::string& path) {
    const json j = parse_file(path);
    const int n_teams = j.value("n_teams", 16);
    const int n_seasons = j.value("n_seasons", 1);
    const auto seed = j.value("seed", std::uint64_t{1});
    LeagueSpec spec = make_league(n_teams, n_seasons, seed);
    auto opt = [&](const char* key, double& field) { field = j.value(key, field); };
    opt("game_seconds", spec.game_seconds);
    opt("seconds_per_tackle", spec.seconds_per_tackle);
    opt("gain_base", spec.gain_base);
    opt("gain_center_bonus", spec.gain_center_bonus);
    opt("gain_strength_scale", spec.gain_strength_scale);
    opt("gain_sd", spec.gain_sd);
    opt("try_base", spec.try_base);
    opt("try_x_coef", spec.try_x_coef);
    opt("try_tackle_coef", spec.try_tackle_coef);
    opt("try_strength_scale", spec.try_strength_scale);
    opt("try_late_boost", spec.try_late_boost);
    opt("conversion_prob", spec.conversion_prob);
    opt("offensive_kick_regain", spec.offensive_kick_regain);
    if (j.contains("teams")) {
        const auto& teams = j.at("teams");
        if (teams.size() != static_cast<std::size_t>(n_teams)) {
            throw std::runtime_error("league config: teams array size != n_teams");
        }
        for (std::size_t i = 0; i < teams.size(); ++i) {
            spec.teams[i].off_strength = teams[i].value("off_strength", 0.0);
            spec.teams[i].def_strength = teams[i].value("def_strength", 0.0);
            spec.teams[i].run_bias = teams[i].value("run_bias", 0.0);
        }
    }
    spec.validate();
    return spec;
}

TrainSettings read_train_settings(const std::string& path) {
    TrainSettings s;
    if (path.empty()) return s;
    const json j = parse_file(path);
    if (j.contains("architecture")) {
        const auto& a = j.at("architecture");
        s.arch.embedding_dim_team = a.value("embedding_dim_team", s.arch.embedding_dim_team);
        s.arch.embedding_dim_tackle = a.value("embedding_dim_tackle", s.arch.embedding_dim_tackle);
        s.arch.spatial_hidden = a.value("spatial_hidden", s.arch.spatial_hidden);
        s.arch.spatial_layers = a.value("spatial_layers", s.arch.spatial_layers);
        s.arch.trunk_hidden = a.value("trunk_hidden", s.arch.trunk_hidden);
        s.arch.mixtures = a.value("mixtures", s.arch.mixtures);
        s.arch.validate();
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        s.train.epochs = t.value("epochs", s.train.epochs);
        s.train.batch_size = t.value("batch_size", s.train.batch_size);
        s.train.learning_rate = t.value("learning_rate", s.train.learning_rate);
        s.train.seed = t.value("seed", s.train.seed);
        s.train.patience = t.value("patience", s.train.patience);
        s.train.val_fraction = t.value("val_fraction", s.train.val_fraction);
    }
    if (j.contains("decision")) {
        const auto& d = j.at("decision");
        s.train_decision = d.value("enabled", true);
        s.decision.iterations = d.value("iterations", s.decision.iterations);
        s.decision.learning_rate = d.value("learning_rate", s.decision.learning_rate);
        s.decision.l2 = d.value("l2", s.decision.l2);
        s.decision.seed = d.value("seed", s.decision.seed);
        s.decision.holdout_fraction = d.value("holdout_fraction", s.decision.holdout_fraction);
    }
    s.split_ratio = j.value("split_ratio", s.split_ratio);
    s.split_seed = j.value("split_seed", s.split_seed);
    return s;
}

namespace {

json head_to_json(const BinaryHeadReport& h) {
    json bins = json::array();
    for (const auto& b : h.bins) {
        bins.push_back({{"lo", b.lo},
                        {"hi", b.hi},
                        {"count", b.count},
                        {"mean_predicted", b.mean_predicted},
                        {"empirical", b.empirical}});
    }
    return json{{"brier", h.brier}, {"calibration_error", h.calibration_error}, {"bins", bins}};
}

}  // namespace

std::string eval_report_json(const EvalReport& r) {
    json j;
    j["nll"] = r.nll;
    j["rmse_meters"] = r.rmse_meters;
    j["rmse_scoreline"] = r.rmse_scoreline;
    j["n_examples"] = r.n_examples;
    j["heads"] = {{"try_tackle", head_to_json(r.try_tackle)},
                  {"try_set", head_to_json(r.try_set)},
                  {"win", head_to_json(r.win)}};
    return j.dump(2);
}

std::string predict_summary_json(const Checkpoint& cp, const TackleEvent& event) {
    ModelPredictor predictor(cp.model, cp.decision);
    const auto mix = predictor.mixture(event);
    auto dist = [&](const ScalarMixture& m) {
        return json{{"mean", mixture_mean(m)},
                    {"q10", mixture_quantile(m, 0.10)},
                    {"q50", mixture_quantile(m, 0.50)},
                    {"q90", mixture_quantile(m, 0.90)}};
    };
    json j;
    j["meters"] = dist(marginal_continuous(mix, ContinuousDim::kMeters));
    j["score_for"] = dist(marginal_continuous(mix, ContinuousDim::kScoreFor));
    j["score_against"] = dist(marginal_continuous(mix, ContinuousDim::kScoreAgainst));
    j["score_diff"] = dist(marginal_score_diff(mix));
    j["ex_try_tackle"] = bernoulli_mean(mix, BinaryDim::kTryTackle);
    j["ex_try_set"] = bernoulli_mean(mix, BinaryDim::kTrySet);
    j["win_probability"] = bernoulli_mean(mix, BinaryDim::kWin);
    if (event.tackle_number == 6 && cp.decision) {
        const auto p = predictor.play_probabilities(event);
        j["play_selection"] = {{"run", p[0]}, {"offensive_kick", p[1]}, {"defensive_kick", p[2]}};
    }
    return j.dump(2);
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    auto out = open_output(path);
    out << "epoch,train_nll,val_nll\n";
    for (const auto& h : history) {
        out << h.epoch << ',' << fmt(h.train_nll) << ',' << fmt(h.val_nll) << '\n';
    }
}

void write_dvoa_csv(const std::string& path, const DvoaTable& table,
                    const std::vector<TeamSeasonSummary>& summary) {
    auto out = open_output(path);
    out << "team,wins,losses,draws,points_for,points_against,meters_for,meters_against,"
           "meter_diff,off_dvoa,def_dvoa,dvoa_diff,off_plays,def_plays\n";
    for (const auto& row : table.teams) {
        const TeamSeasonSummary* s = nullptr;
        for (const auto& cand : summary) {
            if (cand.team == row.team) {
                s = &cand;
                break;
            }
        }
        TeamSeasonSummary blank;
        if (!s) s = &blank;
        out << row.team << ',' << s->wins << ',' << s->losses << ',' << s->draws << ','
            << fmt(s->points_for) << ',' << fmt(s->points_against) << ',' << fmt(s->meters_for)
            << ',' << fmt(s->meters_against) << ',' << fmt(s->meters_for - s->meters_against)
            << ',' << fmt(row.off_dvoa) << ',' << fmt(row.def_dvoa) << ',' << fmt(row.dvoa_diff)
            << ',' << row.off_plays << ',' << row.def_plays << '\n';
    }
}

void write_cumulative_dvoa_csv(const std::string& path,
                               const std::vector<std::pair<int, DvoaTable>>& series) {
    auto out = open_output(path);
    out << "round,team,off_dvoa,def_dvoa,dvoa_diff,off_plays,def_plays\n";
    for (const auto& [round, table] : series) {
        for (const auto& row : table.teams) {
            out << round << ',' << row.team << ',' << fmt(row.off_dvoa) << ','
                << fmt(row.def_dvoa) << ',' << fmt(row.dvoa_diff) << ',' << row.off_plays << ','
                << row.def_plays << '\n';
        }
    }
}

void write_spatial_dvoa_csv(const std::string& path, const SpatialDvoaSplit& split) {
    auto out = open_output(path);
    out << "zone,team,off_dvoa,def_dvoa,dvoa_diff,off_plays,def_plays\n";
    auto dump_zone = [&](const char* name, const DvoaTable& table) {
        for (const auto& row : table.teams) {
            out << name << ',' << row.team << ',' << fmt(row.off_dvoa) << ',' << fmt(row.def_dvoa)
                << ',' << fmt(row.dvoa_diff) << ',' << row.off_plays << ',' << row.def_plays
                << '\n';
        }
    };
    dump_zone("normal", split.normal_zone);
    dump_zone("final_quarter", split.final_quarter);
}

void write_scoreline_csv(const std::string& path, const ScorelineTrace& trace) {
    auto out = open_output(path);
    out << "time_remaining,tackle_number,actual_diff,mean_diff,q10,q50,q90\n";
    for (const auto& r : trace.rows) {
        out << fmt(r.time_remaining) << ',' << r.tackle_number << ',' << fmt(r.actual_diff) << ','
            << fmt(r.mean_diff) << ',' << fmt(r.q10) << ',' << fmt(r.q50) << ',' << fmt(r.q90)
            << '\n';
    }
}

void write_set_trace_csv(const std::string& path, const SetTrace& trace) {
    auto out = open_output(path);
    out << "tackle_number,pos_x,pos_y,ex_try_set,baseline,momentum,observed_meters,"
           "meters_percentile,big_play\n";
    for (const auto& r : trace.rows) {
        out << r.tackle_number << ',' << fmt(r.pos_x) << ',' << fmt(r.pos_y) << ','
            << fmt(r.ex_try_set) << ',' << fmt(r.baseline) << ',' << fmt(r.momentum) << ','
            << fmt(r.observed_meters) << ',' << fmt(r.meters_percentile) << ','
            << (r.big_play ? 1 : 0) << '\n';
    }
}

void write_decisions_csv(const std::string& path, const std::vector<TeamDecisionRow>& rows) {
    auto out = open_output(path);
    out << "team,plays,expected_points,actual_points,over_expected,run_pct,run_rank,"
           "over_expected_rank\n";
    for (const auto& r : rows) {
        out << r.team << ',' << r.plays << ',' << fmt(r.expected_points) << ','
            << fmt(r.actual_points) << ',' << fmt(r.over_expected) << ',' << fmt(r.run_fraction)
            << ',' << r.run_rank << ',' << r.over_rank << '\n';
    }
}

}  // namespace tryline
