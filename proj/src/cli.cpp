#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tryline/io.hpp"

namespace tryline {

namespace {

std::vector<TackleEvent> match_events(const std::vector<TackleEvent>& events,
                                      const std::string& match_id) {
    std::vector<TackleEvent> out;
    std::copy_if(events.begin(), events.end(), std::back_inserter(out),
                 [&](const TackleEvent& e) { return e.match_id == match_id; });
    if (out.empty()) throw std::runtime_error("no events for match '" + match_id + "'");
    return out;
}

std::vector<TackleEvent> decision_events(const std::vector<TackleEvent>& events) {
    std::vector<TackleEvent> out;
    std::copy_if(events.begin(), events.end(), std::back_inserter(out),
                 [](const TackleEvent& e) { return e.last_tackle_play.has_value(); });
    return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Rugby League game-state prediction engine"};
    app.require_subcommand(1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic league as JSONL");
    std::string sim_config;
    std::string sim_out;
    std::optional<std::uint64_t> sim_seed;
    simulate->add_option("--config", sim_config, "League config JSON")->required();
    simulate->add_option("--out", sim_out, "Output JSONL path")->required();
    simulate->add_option("--seed", sim_seed, "Override the config seed");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the model and write a checkpoint");
    std::string train_events_path, train_config, train_checkpoint, train_history, train_test_out;
    train_cmd->add_option("--events", train_events_path, "Training JSONL")->required();
    train_cmd->add_option("--config", train_config, "Train settings JSON");
    train_cmd->add_option("--checkpoint", train_checkpoint, "Checkpoint output path")->required();
    train_cmd->add_option("--history", train_history, "Loss history CSV output");
    train_cmd->add_option("--test-out", train_test_out, "Write the held-out split as JSONL");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on a test set");
    std::string eval_events_path, eval_checkpoint, eval_out;
    eval_cmd->add_option("--events", eval_events_path, "Test JSONL")->required();
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint path")->required();
    eval_cmd->add_option("--out", eval_out, "Also write the report JSON here");

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "Predict the state vector for one event");
    std::string predict_checkpoint, predict_event;
    predict_cmd->add_option("--checkpoint", predict_checkpoint, "Checkpoint path")->required();
    predict_cmd->add_option("--event", predict_event, "Event JSON file (outcomes optional)")
        ->required();

    // dvoa
    auto* dvoa_cmd = app.add_subcommand("dvoa", "Team value-over-average tables");
    std::string dvoa_events, dvoa_checkpoint, dvoa_out, dvoa_cumulative, dvoa_split_out;
    double dvoa_split_x = 75.0;
    dvoa_cmd->add_option("--events", dvoa_events, "Events JSONL")->required();
    dvoa_cmd->add_option("--checkpoint", dvoa_checkpoint, "Checkpoint path")->required();
    dvoa_cmd->add_option("--out", dvoa_out, "Season table CSV")->required();
    dvoa_cmd->add_option("--cumulative", dvoa_cumulative, "Per-round running table CSV");
    dvoa_cmd->add_option("--split-out", dvoa_split_out, "Spatial split CSV");
    dvoa_cmd->add_option("--split-x", dvoa_split_x, "Spatial split threshold (default 75)");

    // scoreline
    auto* scoreline_cmd = app.add_subcommand("scoreline", "Final-scoreline trace for one match");
    std::string sl_events, sl_checkpoint, sl_match, sl_out;
    scoreline_cmd->add_option("--events", sl_events, "Events JSONL")->required();
    scoreline_cmd->add_option("--checkpoint", sl_checkpoint, "Checkpoint path")->required();
    scoreline_cmd->add_option("--match", sl_match, "Match id")->required();
    scoreline_cmd->add_option("--out", sl_out, "Trace CSV")->required();

    // set-trace
    auto* set_cmd = app.add_subcommand("set-trace", "Momentum / big-play trace for one set");
    std::string st_events, st_checkpoint, st_match, st_out;
    int st_index = 0;
    set_cmd->add_option("--events", st_events, "Events JSONL")->required();
    set_cmd->add_option("--checkpoint", st_checkpoint, "Checkpoint path")->required();
    set_cmd->add_option("--match", st_match, "Match id")->required();
    set_cmd->add_option("--set", st_index, "Set index within the match (0-based)")->required();
    set_cmd->add_option("--out", st_out, "Trace CSV")->required();

    // decisions
    auto* dec_cmd = app.add_subcommand("decisions", "Last-tackle decision valuation table");
    std::string dec_events, dec_checkpoint, dec_out;
    double dec_ppt = 6.0;
    dec_cmd->add_option("--events", dec_events, "Events JSONL")->required();
    dec_cmd->add_option("--checkpoint", dec_checkpoint, "Checkpoint path")->required();
    dec_cmd->add_option("--out", dec_out, "Valuation CSV")->required();
    dec_cmd->add_option("--points-per-try", dec_ppt, "Expected points per try (default 6)");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help
        }
        std::cerr << "error: usage: " << e.what() << '\n';
        return 1;
    }

    try {
        if (*simulate) {
            LeagueSpec spec = read_league_spec(sim_config);
            if (sim_seed) {
                spec = make_league(spec.n_teams, spec.n_seasons, *sim_seed);
                LeagueSpec from_file = read_league_spec(sim_config);
                from_file.seed = *sim_seed;
                from_file.teams = spec.teams;
                spec = from_file;
            }
            write_events(sim_out, simulate_league(spec));
            return 0;
        }
        if (*train_cmd) {
            const auto settings = read_train_settings(train_config);
            const auto all = read_events(train_events_path);
            auto [train_set, test_set] = split_dataset(all, settings.split_ratio, settings.split_seed);
            const auto vocab = build_vocab(all);
            const auto result = train(train_set, vocab, settings.arch, settings.train);

            Checkpoint cp;
            cp.model = result.params;
            cp.meta.seed = settings.train.seed;
            cp.meta.epochs = static_cast<int>(result.history.size());
            if (!result.history.empty()) {
                cp.meta.final_train_nll = result.history.back().train_nll;
                cp.meta.final_val_nll = result.best_val_nll;
            }
            if (settings.train_decision) {
                const auto labeled = decision_events(train_set);
                if (!labeled.empty()) {
                    cp.decision = train_logistic(labeled, vocab, settings.decision).weights;
                }
            }
            save_checkpoint(train_checkpoint, cp);
            if (!train_history.empty()) write_history_csv(train_history, result.history);
            if (!train_test_out.empty()) write_events(train_test_out, test_set);
            return 0;
        }
        if (*eval_cmd) {
            const auto cp = load_checkpoint(eval_checkpoint);
            const auto events = read_events(eval_events_path);
            const auto report = evaluate(cp.model, events);
            const auto text = eval_report_json(report);
            std::cout << text << '\n';
            if (!eval_out.empty()) {
                std::ofstream out(eval_out);
                if (!out) throw std::runtime_error("cannot open '" + eval_out + "' for writing");
                out << text << '\n';
            }
            return 0;
        }
        if (*predict_cmd) {
            const auto cp = load_checkpoint(predict_checkpoint);
            const auto event = read_event_file(predict_event, /*require_outcomes=*/false);
            std::cout << predict_summary_json(cp, event) << '\n';
            return 0;
        }
        if (*dvoa_cmd) {
            const auto cp = load_checkpoint(dvoa_checkpoint);
            const auto events = read_events(dvoa_events);
            ModelPredictor predictor(cp.model, cp.decision);
            write_dvoa_csv(dvoa_out, compute_dvoa(events, predictor), season_summary(events));
            if (!dvoa_cumulative.empty()) {
                write_cumulative_dvoa_csv(dvoa_cumulative, cumulative_dvoa(events, predictor));
            }
            if (!dvoa_split_out.empty()) {
                write_spatial_dvoa_csv(dvoa_split_out,
                                       spatial_split_dvoa(events, predictor, dvoa_split_x));
            }
            return 0;
        }
        if (*scoreline_cmd) {
            const auto cp = load_checkpoint(sl_checkpoint);
            const auto events = match_events(read_events(sl_events), sl_match);
            ModelPredictor predictor(cp.model, cp.decision);
            write_scoreline_csv(sl_out, scoreline_trace(events, predictor));
            return 0;
        }
        if (*set_cmd) {
            const auto cp = load_checkpoint(st_checkpoint);
            const auto all = read_events(st_events);
            ModelPredictor predictor(cp.model, cp.decision);
            const auto baseline = baseline_table(all, predictor);
            const auto sets = split_sets(match_events(all, st_match));
            if (st_index < 0 || static_cast<std::size_t>(st_index) >= sets.size()) {
                throw std::runtime_error("match has " + std::to_string(sets.size()) +
                                         " sets, index " + std::to_string(st_index) +
                                         " out of range");
            }
            write_set_trace_csv(st_out,
                                set_trace(sets[static_cast<std::size_t>(st_index)], predictor,
                                          baseline));
            return 0;
        }
        if (*dec_cmd) {
            const auto cp = load_checkpoint(dec_checkpoint);
            const auto events = read_events(dec_events);
            ModelPredictor predictor(cp.model, cp.decision);
            if (!predictor.has_decision_model()) {
                throw std::runtime_error("checkpoint has no decision head; retrain with decisions "
                                         "enabled");
            }
            write_decisions_csv(dec_out, decision_table(decision_events(events), predictor, dec_ppt));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: data: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace tryline
