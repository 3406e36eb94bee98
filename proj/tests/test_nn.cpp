#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <functional>
#include <random>
#include <vector>

#include "tryline/nn.hpp"

using namespace tryline;

namespace {

ParamTensor make_param(std::vector<std::size_t> shape, std::vector<double> values) {
    ParamTensor t(std::move(shape));
    t.values = std::move(values);
    t.grad.assign(t.values.size(), 0.0);
    return t;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

// Central finite differences against the tape gradient, step 1e-5.
// build_loss runs backward internally, so grads are snapshotted after the
// base evaluation before the perturbed re-evaluations pollute them.
double max_grad_rel_err(const std::function<double(Tape&)>& build_loss,
                        std::vector<ParamTensor*> params) {
    for (ParamTensor* p : params) p->zero_grad();
    Tape tape;
    const double base = build_loss(tape);
    CHECK(std::isfinite(base));
    std::vector<std::vector<double>> ad;
    for (ParamTensor* p : params) ad.push_back(p->grad);

    double worst = 0.0;
    const double h = 1e-5;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        ParamTensor* p = params[pi];
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double keep = p->values[i];
            p->values[i] = keep + h;
            Tape tp;
            const double lp = build_loss(tp);
            p->values[i] = keep - h;
            Tape tm;
            const double lm = build_loss(tm);
            p->values[i] = keep;
            const double fd = (lp - lm) / (2.0 * h);
            worst = std::max(worst, rel_err(ad[pi][i], fd));
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("dense_forward basic algebra") {
    Tape tape;
    auto w_id = make_param({2, 2}, {1, 0, 0, 1});
    auto b0 = make_param({2}, {0, 0});
    NodeId y = tape.dense(tape.leaf({1, 2}), w_id, &b0);
    CHECK(tape.value(y)[0] == doctest::Approx(1));
    CHECK(tape.value(y)[1] == doctest::Approx(2));

    auto w = make_param({2, 2}, {1, 1, 1, -1});
    NodeId y2 = tape.dense(tape.leaf({3, 4}), w, &b0);
    CHECK(tape.value(y2)[0] == doctest::Approx(7));
    CHECK(tape.value(y2)[1] == doctest::Approx(-1));

    auto wz = make_param({1, 3}, {0, 0, 0});
    auto b5 = make_param({1}, {5});
    NodeId y3 = tape.dense(tape.leaf({9, -3, 2}), wz, &b5);
    CHECK(tape.value(y3)[0] == doctest::Approx(5));
}

TEST_CASE("dense_forward rejects shape mismatch") {
    Tape tape;
    auto w = make_param({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK_THROWS_AS(tape.dense(tape.leaf({1, 2}), w, nullptr), std::invalid_argument);
    auto bad_bias = make_param({3}, {0, 0, 0});
    CHECK_THROWS_AS(tape.dense(tape.leaf({1, 2, 3}), w, &bad_bias), std::invalid_argument);
}

TEST_CASE("activation values") {
    CHECK(sigmoid(0.0) == doctest::Approx(0.5));
    const std::vector<double> zeros(5, 0.0);
    auto sm = softmax(zeros);
    for (double v : sm) CHECK(v == doctest::Approx(0.2));
    const std::vector<double> big{1000.0, 1000.0};
    CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-12));
    const std::vector<double> neg{-3.0, 0.0, 2.0};
    auto r = relu(neg);
    CHECK(r[0] == 0.0);
    CHECK(r[1] == 0.0);
    CHECK(r[2] == 2.0);
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
    CHECK(softplus(800.0) == doctest::Approx(800.0));
}

TEST_CASE("softmax normalization and range over random inputs") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-30.0, 30.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(1 + trial % 9);
        for (double& v : x) v = dist(rng);
        auto y = softmax(x);
        double sum = 0.0;
        for (double v : y) {
            CHECK(v > 0.0);
            CHECK(v < 1.0 + 1e-15);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("log_sum_exp shift identity at c=1000") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    std::vector<double> x(6), shifted(6);
    for (int i = 0; i < 6; ++i) {
        x[i] = dist(rng);
        shifted[i] = x[i] + 1000.0;
    }
    CHECK(log_sum_exp(shifted) - 1000.0 == doctest::Approx(log_sum_exp(x)).epsilon(1e-12));
}

TEST_CASE("backward: analytic derivatives of x^2 and sigmoid") {
    auto x = make_param({1}, {3.0});
    Tape tape;
    NodeId xn = tape.param(x);
    NodeId loss = tape.mul(xn, xn);
    tape.backward(loss);
    CHECK(x.grad[0] == doctest::Approx(6.0));

    auto x0 = make_param({1}, {0.0});
    Tape t2;
    NodeId loss2 = t2.sigmoid(t2.param(x0));
    t2.backward(loss2);
    CHECK(x0.grad[0] == doctest::Approx(0.25));
}

TEST_CASE("backward rejects non-scalar loss") {
    auto x = make_param({2}, {1.0, 2.0});
    Tape tape;
    NodeId xn = tape.param(x);
    CHECK_THROWS_AS(tape.backward(xn), std::invalid_argument);
}

TEST_CASE("backward leaves disconnected parameters at exactly zero") {
    auto x = make_param({2}, {1.0, 2.0});
    auto unused = make_param({3}, {4.0, 5.0, 6.0});
    Tape tape;
    NodeId xn = tape.param(x);
    tape.param(unused);  // on the tape but not on any path to the loss
    NodeId loss = tape.log_sum_exp(xn);
    tape.backward(loss);
    for (double g : unused.grad) CHECK(g == 0.0);
    CHECK(x.grad[0] + x.grad[1] == doctest::Approx(1.0));
}

TEST_CASE("every primitive matches central finite differences") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::uniform_real_distribution<double> pos_dist(0.5, 2.5);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto a = make_param({6}, {});
        auto b = make_param({6}, {});
        a.values.resize(6);
        b.values.resize(6);
        a.grad.assign(6, 0.0);
        b.grad.assign(6, 0.0);
        for (int i = 0; i < 6; ++i) {
            a.values[i] = dist(rng);
            b.values[i] = pos_dist(rng);  // positive: safe for div/log
        }
        std::vector<double> mix(12);
        for (double& v : mix) v = dist(rng);

        struct Case {
            const char* name;
            std::function<NodeId(Tape&, NodeId, NodeId)> apply;
        };
        const Case cases[] = {
            {"relu", [](Tape& t, NodeId x, NodeId) { return t.relu(x); }},
            {"sigmoid", [](Tape& t, NodeId x, NodeId) { return t.sigmoid(x); }},
            {"softplus", [](Tape& t, NodeId x, NodeId) { return t.softplus(x); }},
            {"softmax", [](Tape& t, NodeId x, NodeId) { return t.softmax(x); }},
            {"log_softmax", [](Tape& t, NodeId x, NodeId) { return t.log_softmax(x); }},
            {"log", [](Tape& t, NodeId, NodeId y) { return t.log(y); }},
            {"add", [](Tape& t, NodeId x, NodeId y) { return t.add(x, y); }},
            {"sub", [](Tape& t, NodeId x, NodeId y) { return t.sub(x, y); }},
            {"mul", [](Tape& t, NodeId x, NodeId y) { return t.mul(x, y); }},
            {"div", [](Tape& t, NodeId x, NodeId y) { return t.div(x, y); }},
            {"scale", [](Tape& t, NodeId x, NodeId) { return t.scale(x, -1.7); }},
            {"add_const", [](Tape& t, NodeId x, NodeId) { return t.add_const(x, 0.3); }},
            {"slice", [](Tape& t, NodeId x, NodeId) { return t.slice(x, 1, 3); }},
            {"group_sum", [](Tape& t, NodeId x, NodeId) { return t.group_sum(x, 2); }},
            {"concat", [](Tape& t, NodeId x, NodeId y) {
                 const NodeId parts[2] = {x, y};
                 return t.concat(parts);
             }},
        };
        for (const auto& c : cases) {
            const std::string name = c.name;
            CAPTURE(name);
            auto build = [&](Tape& t) {
                NodeId an = t.param(a);
                NodeId bn = t.param(b);
                NodeId out = c.apply(t, an, bn);
                // project to a scalar with fixed random weights so every
                // output coordinate gets a distinct adjoint
                NodeId w = t.leaf(std::span<const double>(mix.data(), t.value(out).size()));
                NodeId loss = t.group_sum(t.mul(out, w), 1);
                const double v = t.scalar(loss);
                t.backward(loss);
                return v;
            };
            const double err = max_grad_rel_err(build, {&a, &b});
            CHECK_MESSAGE(err < 1e-4, name << " max rel err " << err);
        }
    }
}

TEST_CASE("dense and embed_sum and log_sum_exp match finite differences") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    auto w = make_param({3, 4}, {});
    w.values.resize(12);
    w.grad.assign(12, 0.0);
    auto bias = make_param({3}, {});
    bias.values.resize(3);
    bias.grad.assign(3, 0.0);
    auto table = make_param({5, 3}, {});
    table.values.resize(15);
    table.grad.assign(15, 0.0);
    for (auto* p : {&w, &bias, &table})
        for (double& v : p->values) v = dist(rng);
    std::vector<double> x(4);
    for (double& v : x) v = dist(rng);

    auto build = [&](Tape& t) {
        NodeId h = t.dense(t.leaf(x), w, &bias);
        const std::size_t rows[2] = {1, 4};
        NodeId e = t.embed_sum(table, rows);
        NodeId loss = t.log_sum_exp(t.add(h, e));
        const double v = t.scalar(loss);
        t.backward(loss);
        return v;
    };
    const double err = max_grad_rel_err(build, {&w, &bias, &table});
    CHECK(err < 1e-4);
}

TEST_CASE("adam: zero gradient is a fixed point") {
    auto p = make_param({3}, {1.0, -2.0, 0.5});
    std::vector<ParamTensor*> params{&p};
    auto st = make_adam_state(params);
    adam_step(params, st);
    CHECK(p.values[0] == 1.0);
    CHECK(p.values[1] == -2.0);
    CHECK(p.values[2] == 0.5);
    CHECK(st.step == 1);
}

TEST_CASE("adam: moves against a constant gradient") {
    auto p = make_param({1}, {0.0});
    std::vector<ParamTensor*> params{&p};
    auto st = make_adam_state(params);
    for (int i = 0; i < 50; ++i) {
        p.grad[0] = 2.5;
        adam_step(params, st);
    }
    CHECK(p.values[0] < 0.0);
}

TEST_CASE("adam: quadratic bowl loss strictly decreases over 100 steps") {
    auto p = make_param({2}, {5.0, -4.0});
    std::vector<ParamTensor*> params{&p};
    AdamConfig cfg;
    cfg.lr = 1e-2;
    auto st = make_adam_state(params, cfg);
    auto loss = [&] { return p.values[0] * p.values[0] + p.values[1] * p.values[1]; };
    double prev = loss();
    for (int i = 0; i < 100; ++i) {
        p.grad[0] = 2.0 * p.values[0];
        p.grad[1] = 2.0 * p.values[1];
        adam_step(params, st);
        const double cur = loss();
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("adam: non-finite gradient aborts the step") {
    auto p = make_param({1}, {1.0});
    std::vector<ParamTensor*> params{&p};
    auto st = make_adam_state(params);
    p.grad[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(adam_step(params, st), std::runtime_error);
    CHECK(p.values[0] == 1.0);
}

TEST_CASE("glorot init is deterministic per seed") {
    ParamTensor a({4, 6});
    ParamTensor b({4, 6});
    std::mt19937_64 r1(42), r2(42);
    glorot_fill(a, 4, 6, r1);
    glorot_fill(b, 4, 6, r2);
    CHECK(a.values == b.values);
    const double bound = std::sqrt(6.0 / 10.0);
    for (double v : a.values) CHECK(std::abs(v) <= bound);
}
