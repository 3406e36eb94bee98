#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <random>

#include "test_util.hpp"
#include "tryline/mdn.hpp"

using namespace tryline;
using tryline::test::random_event;
using tryline::test::small_arch;
using tryline::test::small_league;

TEST_CASE("init_model is deterministic per seed") {
    auto cfg = small_league();
    auto a = init_model(small_arch(), cfg, 7);
    auto b = init_model(small_arch(), cfg, 7);
    auto ta = a.tensors();
    auto tb = b.tensors();
    REQUIRE(ta.size() == tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) CHECK(ta[i]->values == tb[i]->values);
    auto c = init_model(small_arch(), cfg, 8);
    CHECK(a.output_weights.values != c.output_weights.values);
}

TEST_CASE("architecture width arithmetic") {
    ModelArchitecture arch;  // defaults
    CHECK(arch.trunk_input_width() == 8 + 8 + 4 + 50 + 2 + 2);
    CHECK(arch.output_width() == 5 * 10);

    EncodingConfig cfg;
    cfg.n_seasons = 4;
    cfg.n_teams = 16;
    auto params = init_model(arch, cfg, 1);
    CHECK(params.team_embedding.rows() == 20);
    CHECK(params.trunk_weights[0].cols() == 74);
    CHECK(params.output_weights.rows() == 50);
    CHECK(params.output_bias.size() == 50);
}

TEST_CASE("forward satisfies mixture constraints") {
    auto cfg = small_league();
    auto params = init_model(small_arch(), cfg, 3);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
        auto ex = encode_event(random_event(rng, cfg), cfg);
        auto mix = forward(ex, params);
        double sum = 0.0;
        for (double w : mix.weights) {
            CHECK(w > 0.0);
            CHECK(w < 1.0);
            sum += w;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        for (double s : mix.sigma) CHECK(s >= kSigmaFloor);
        for (double p : mix.p) {
            CHECK(p > 0.0);
            CHECK(p < 1.0);
        }
    }
}

TEST_CASE("forward distinguishes team identity at init") {
    auto cfg = small_league();
    auto params = init_model(small_arch(), cfg, 3);
    std::mt19937_64 rng(6);
    auto e1 = random_event(rng, cfg);
    e1.team_idx = 0;
    e1.opponent_idx = 2;
    auto e2 = e1;
    e2.team_idx = 1;
    auto m1 = forward(encode_event(e1, cfg), params);
    auto m2 = forward(encode_event(e2, cfg), params);
    bool any_diff = m1.weights != m2.weights || m1.mu != m2.mu || m1.p != m2.p;
    CHECK(any_diff);
}

TEST_CASE("forward with all-zero weights gives uniform pi and p = 0.5") {
    auto cfg = small_league();
    auto params = init_model(small_arch(), cfg, 3);
    for (ParamTensor* t : params.tensors())
        std::fill(t->values.begin(), t->values.end(), 0.0);
    std::mt19937_64 rng(7);
    auto ex = encode_event(random_event(rng, cfg), cfg);
    auto mix = forward(ex, params);
    for (double w : mix.weights) CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    for (double p : mix.p) CHECK(p == doctest::Approx(0.5).epsilon(1e-12));
    for (double s : mix.sigma) CHECK(s == doctest::Approx(std::log(2.0) + kSigmaFloor));
}

TEST_CASE("forward rejects vocabulary mismatch") {
    auto cfg = small_league();
    auto params = init_model(small_arch(), cfg, 3);
    EncodingConfig bigger = cfg;
    bigger.n_teams = 9;
    std::mt19937_64 rng(8);
    auto ex = encode_event(random_event(rng, bigger), bigger);
    CHECK_THROWS_AS(forward(ex, params), std::runtime_error);
}

TEST_CASE("joint_nll closed form: standard normals at mean + fair coins") {
    MixtureParams mix;
    mix.mixtures = 1;
    mix.weights = {1.0};
    mix.mu = {0.0, 0.0, 0.0};
    mix.sigma = {1.0, 1.0, 1.0};
    mix.p = {0.5, 0.5, 0.5};
    GameStateTarget t;
    t.meters = 0.0;
    t.score_for = 0.0;
    t.score_against = 0.0;
    t.try_tackle = false;
    t.try_set = true;
    t.won = false;
    // 3 * 0.5*ln(2*pi) + 3 * ln 2
    CHECK(joint_nll(mix, t) == doctest::Approx(4.836257).epsilon(1e-6));
}

TEST_CASE("joint_nll is invariant to duplicating a component with halved weight") {
    MixtureParams a;
    a.mixtures = 2;
    a.weights = {0.6, 0.4};
    a.mu = {1.0, 20.0, 10.0, -2.0, 15.0, 12.0};
    a.sigma = {2.0, 5.0, 4.0, 1.0, 6.0, 3.0};
    a.p = {0.1, 0.3, 0.7, 0.2, 0.4, 0.6};

    MixtureParams b;
    b.mixtures = 3;
    b.weights = {0.3, 0.3, 0.4};
    b.mu = {1.0, 20.0, 10.0, 1.0, 20.0, 10.0, -2.0, 15.0, 12.0};
    b.sigma = {2.0, 5.0, 4.0, 2.0, 5.0, 4.0, 1.0, 6.0, 3.0};
    b.p = {0.1, 0.3, 0.7, 0.1, 0.3, 0.7, 0.2, 0.4, 0.6};

    GameStateTarget t;
    t.meters = 3.0;
    t.score_for = 18.0;
    t.score_against = 12.0;
    t.try_tackle = false;
    t.try_set = false;
    t.won = true;
    CHECK(joint_nll(a, t) == doctest::Approx(joint_nll(b, t)).epsilon(1e-12));
}

TEST_CASE("joint_nll decreases as realized-outcome probability rises") {
    MixtureParams mix;
    mix.mixtures = 1;
    mix.weights = {1.0};
    mix.mu = {0.0, 0.0, 0.0};
    mix.sigma = {1.0, 1.0, 1.0};
    GameStateTarget t;
    t.try_tackle = true;
    t.try_set = true;
    t.won = false;
    double prev = std::numeric_limits<double>::infinity();
    for (double p = 0.1; p < 0.95; p += 0.1) {
        mix.p = {p, 0.5, 0.5};
        const double loss = joint_nll(mix, t);
        CHECK(loss < prev);
        prev = loss;
    }
}

TEST_CASE("tape NLL equals the closed-form NLL") {
    auto cfg = small_league();
    auto params = init_model(small_arch(), cfg, 11);
    std::mt19937_64 rng(12);
    for (int i = 0; i < 20; ++i) {
        auto ex = encode_event(random_event(rng, cfg), cfg);
        Tape tape;
        auto nodes = forward_on_tape(tape, ex, params);
        const double on_tape = tape.scalar(nll_on_tape(tape, nodes, ex.target));
        const double closed = joint_nll(extract_mixture(tape, nodes), ex.target);
        CHECK(on_tape == doctest::Approx(closed).epsilon(1e-12));
    }
}

TEST_CASE("embedding-sum equals dense layer on the concatenated one-hot") {
    auto cfg = small_league();
    auto params = init_model(small_arch(), cfg, 13);
    std::mt19937_64 rng(14);
    auto ex = encode_event(random_event(rng, cfg), cfg);

    Tape tape;
    const std::size_t rows[2] = {ex.season_slot, ex.team_slot};
    const auto embed_span = tape.value(tape.embed_sum(params.team_embedding, rows));
    const std::vector<double> via_embed(embed_span.begin(), embed_span.end());

    // same table used as a [dim x vocab] dense on the indicator
    const std::size_t dim = params.team_embedding.cols();
    const std::size_t vocab = params.team_embedding.rows();
    ParamTensor transposed({dim, vocab});
    for (std::size_t r = 0; r < vocab; ++r)
        for (std::size_t c = 0; c < dim; ++c)
            transposed.values[c * vocab + r] = params.team_embedding.values[r * dim + c];
    const auto dense_span = tape.value(tape.dense(tape.leaf(ex.team_indicator), transposed, nullptr));
    const std::vector<double> via_dense(dense_span.begin(), dense_span.end());

    REQUIRE(via_embed.size() == via_dense.size());
    for (std::size_t i = 0; i < via_embed.size(); ++i)
        CHECK(via_embed[i] == doctest::Approx(via_dense[i]).epsilon(1e-12));
}

TEST_CASE("batch_loss basics") {
    auto cfg = small_league();
    auto params = init_model(small_arch(), cfg, 21);
    std::mt19937_64 rng(22);
    std::vector<EncodedExample> batch;
    for (int i = 0; i < 8; ++i) batch.push_back(encode_event(random_event(rng, cfg), cfg));

    SUBCASE("batch of one equals joint_nll") {
        const double single = batch_loss({batch.data(), 1}, params);
        CHECK(single == doctest::Approx(joint_nll(forward(batch[0], params), batch[0].target))
                            .epsilon(1e-12));
    }
    SUBCASE("identical examples equal the per-example loss") {
        std::vector<EncodedExample> same(5, batch[2]);
        CHECK(batch_loss(same, params) ==
              doctest::Approx(batch_loss({same.data(), 1}, params)).epsilon(1e-12));
    }
    SUBCASE("permutation leaves the mean unchanged") {
        const double before = batch_loss(batch, params);
        std::vector<EncodedExample> shuffled(batch.rbegin(), batch.rend());
        std::swap(shuffled[0], shuffled[3]);
        CHECK(batch_loss(shuffled, params) == doctest::Approx(before).epsilon(1e-12));
    }
    SUBCASE("empty batch rejected") {
        CHECK_THROWS_AS(batch_loss(std::span<const EncodedExample>{}, params),
                        std::invalid_argument);
    }
}

TEST_CASE("composed MDN loss gradient matches finite differences on 10 seeds") {
    auto cfg = small_league();
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto params = init_model(small_arch(), cfg, seed);
        std::mt19937_64 rng(seed * 77);
        auto ex = encode_event(tryline::test::fd_probe_event(rng, cfg), cfg);

        auto eval = [&] {
            Tape tape;
            auto nodes = forward_on_tape(tape, ex, params);
            return tape.scalar(nll_on_tape(tape, nodes, ex.target));
        };

        zero_grads(params.tensors());
        {
            Tape tape;
            auto nodes = forward_on_tape(tape, ex, params);
            tape.backward(nll_on_tape(tape, nodes, ex.target));
        }
        const double h = 1e-5;
        for (ParamTensor* t : params.tensors()) {
            for (std::size_t i = 0; i < t->size(); ++i) {
                const double keep = t->values[i];
                t->values[i] = keep + h;
                const double lp = eval();
                t->values[i] = keep - h;
                const double lm = eval();
                t->values[i] = keep;
                const double fd = (lp - lm) / (2.0 * h);
                const double ad = t->grad[i];
                const double err = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-3});
                worst = std::max(worst, err);
            }
        }
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("forward never emits NaN or Inf across 10k random in-range inputs") {
    auto cfg = small_league();
    auto params = init_model(small_arch(), cfg, 31);
    std::mt19937_64 rng(32);
    for (int i = 0; i < 10000; ++i) {
        auto ex = encode_event(random_event(rng, cfg), cfg);
        auto mix = forward(ex, params);
        for (double v : mix.weights) REQUIRE(std::isfinite(v));
        for (double v : mix.mu) REQUIRE(std::isfinite(v));
        for (double v : mix.sigma) REQUIRE(std::isfinite(v));
        for (double v : mix.p) REQUIRE(std::isfinite(v));
        const double loss = joint_nll(mix, ex.target);
        REQUIRE(std::isfinite(loss));
    }
}
