#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <random>

#include "tryline/mixture.hpp"

using namespace tryline;

namespace {

ScalarMixture gauss(double mu, double sigma) {
    return ScalarMixture{{1.0}, {mu}, {sigma}};
}

ScalarMixture three_component() {
    return ScalarMixture{{0.5, 0.3, 0.2}, {-4.0, 1.0, 9.0}, {1.5, 0.6, 3.0}};
}

// Simpson's rule over the +/- 10 sigma envelope.
double quadrature_mass(const ScalarMixture& m) {
    const double lo = *std::min_element(m.mu.begin(), m.mu.end()) -
                      10.0 * *std::max_element(m.sigma.begin(), m.sigma.end());
    const double hi = *std::max_element(m.mu.begin(), m.mu.end()) +
                      10.0 * *std::max_element(m.sigma.begin(), m.sigma.end());
    const int n = 4000;  // even
    const double h = (hi - lo) / n;
    double acc = mixture_pdf(m, lo) + mixture_pdf(m, hi);
    for (int i = 1; i < n; ++i) acc += mixture_pdf(m, lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

MixtureParams demo_params() {
    MixtureParams mix;
    mix.mixtures = 2;
    mix.weights = {0.7, 0.3};
    mix.mu = {5.0, 22.0, 12.0, -1.0, 14.0, 18.0};
    mix.sigma = {3.0, 6.0, 5.0, 2.0, 4.0, 7.0};
    mix.p = {0.05, 0.2, 0.8, 0.1, 0.3, 0.4};
    return mix;
}

}  // namespace

TEST_CASE("marginal_continuous extracts the dim columns") {
    auto mix = demo_params();
    auto m = marginal_continuous(mix, ContinuousDim::kMeters);
    CHECK(m.weights == mix.weights);
    CHECK(m.mu == std::vector<double>{5.0, -1.0});
    CHECK(m.sigma == std::vector<double>{3.0, 2.0});
    m.validate();

    MixtureParams single;
    single.mixtures = 1;
    single.weights = {1.0};
    single.mu = {4.0, 1.0, 2.0};
    single.sigma = {2.5, 1.0, 1.0};
    single.p = {0.5, 0.5, 0.5};
    auto g = marginal_continuous(single, ContinuousDim::kMeters);
    CHECK(g.mu[0] == 4.0);
    CHECK(g.sigma[0] == 2.5);
    CHECK(quadrature_mass(g) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("marginal_score_diff subtracts means and adds variances") {
    MixtureParams single;
    single.mixtures = 1;
    single.weights = {1.0};
    single.mu = {0.0, 20.0, 10.0};
    single.sigma = {1.0, 3.0, 4.0};
    single.p = {0.5, 0.5, 0.5};
    auto d = marginal_score_diff(single);
    CHECK(d.mu[0] == doctest::Approx(10.0));
    CHECK(d.sigma[0] == doctest::Approx(5.0));

    // mirrored components around zero -> zero mixture mean
    MixtureParams sym;
    sym.mixtures = 2;
    sym.weights = {0.5, 0.5};
    sym.mu = {0, 15, 5, 0, 5, 15};
    sym.sigma = {1, 2, 3, 1, 3, 2};
    sym.p = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
    CHECK(mixture_mean(marginal_score_diff(sym)) == doctest::Approx(0.0));

    // swapping for/against negates the differential mixture
    auto mix = demo_params();
    auto swapped = mix;
    for (int k = 0; k < mix.mixtures; ++k) {
        std::swap(swapped.mu[k * 3 + 1], swapped.mu[k * 3 + 2]);
        std::swap(swapped.sigma[k * 3 + 1], swapped.sigma[k * 3 + 2]);
    }
    auto d1 = marginal_score_diff(mix);
    auto d2 = marginal_score_diff(swapped);
    for (int k = 0; k < mix.mixtures; ++k) {
        CHECK(d1.mu[k] == doctest::Approx(-d2.mu[k]));
        CHECK(d1.sigma[k] == doctest::Approx(d2.sigma[k]));
    }

    CHECK(mixture_mean(d1) ==
          doctest::Approx(mixture_mean(marginal_continuous(mix, ContinuousDim::kScoreFor)) -
                          mixture_mean(marginal_continuous(mix, ContinuousDim::kScoreAgainst)))
              .epsilon(1e-12));
}

TEST_CASE("bernoulli_mean is the weight-averaged head") {
    MixtureParams mix;
    mix.mixtures = 5;
    mix.weights = {0.2, 0.2, 0.2, 0.2, 0.2};
    mix.mu.assign(15, 0.0);
    mix.sigma.assign(15, 1.0);
    mix.p.assign(15, 0.0);
    for (int k = 0; k < 5; ++k) mix.p[k * 3 + 0] = 0.1 * (k + 1);
    CHECK(bernoulli_mean(mix, BinaryDim::kTryTackle) == doctest::Approx(0.3).epsilon(1e-12));

    for (int k = 0; k < 5; ++k) mix.p[k * 3 + 2] = 0.42;
    CHECK(bernoulli_mean(mix, BinaryDim::kWin) == doctest::Approx(0.42).epsilon(1e-12));
}

TEST_CASE("bernoulli_mean agrees with a sampling oracle") {
    MixtureParams mix;
    mix.mixtures = 3;
    mix.weights = {0.5, 0.3, 0.2};
    mix.mu.assign(9, 0.0);
    mix.sigma.assign(9, 1.0);
    mix.p = {0.1, 0, 0, 0.6, 0, 0, 0.9, 0, 0};
    const double q = bernoulli_mean(mix, BinaryDim::kTryTackle);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = 100000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        const double u = unit(rng);
        const int k = u < 0.5 ? 0 : (u < 0.8 ? 1 : 2);
        if (unit(rng) < mix.p[k * 3]) ++hits;
    }
    const double freq = static_cast<double>(hits) / n;
    const double band = 3.0 * std::sqrt(q * (1 - q) / n);
    CHECK(std::abs(freq - q) < band);
}

TEST_CASE("mixture_cdf basics and limits") {
    auto m = gauss(0.0, 1.0);
    CHECK(mixture_cdf(m, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mixture_cdf(m, -50.0) == doctest::Approx(0.0));
    CHECK(mixture_cdf(m, 50.0) == doctest::Approx(1.0));
    auto mm = three_component();
    double prev = -1.0;
    for (double v = -15.0; v <= 25.0; v += 0.25) {
        const double c = mixture_cdf(mm, v);
        CHECK(c >= prev);
        prev = c;
    }
}

TEST_CASE("mixture_cdf matches the empirical CDF of 1e6 samples") {
    auto m = three_component();
    std::mt19937_64 rng(23);
    const std::size_t n = 1000000;
    auto draws = sample(m, rng, n);
    std::sort(draws.begin(), draws.end());
    double sup = 0.0;
    for (double v = -12.0; v <= 20.0; v += 0.8) {
        const auto it = std::upper_bound(draws.begin(), draws.end(), v);
        const double emp = static_cast<double>(it - draws.begin()) / n;
        sup = std::max(sup, std::abs(emp - mixture_cdf(m, v)));
    }
    CHECK(sup < 0.005);
}

TEST_CASE("mixture_quantile inverts the CDF") {
    auto m = gauss(0.0, 1.0);
    CHECK(mixture_quantile(m, 0.5) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(mixture_quantile(m, 0.9) == doctest::Approx(1.281552).epsilon(1e-6));
    CHECK_THROWS_AS(mixture_quantile(m, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(mixture_quantile(m, 1.0), std::invalid_argument);

    auto mm = three_component();
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> dist(-10.0, 18.0);
    for (int i = 0; i < 200; ++i) {
        const double v = dist(rng);
        CHECK(mixture_quantile(mm, mixture_cdf(mm, v)) == doctest::Approx(v).epsilon(1e-6));
    }
    const double q10 = mixture_quantile(mm, 0.1);
    const double q50 = mixture_quantile(mm, 0.5);
    const double q90 = mixture_quantile(mm, 0.9);
    CHECK(q10 <= q50);
    CHECK(q50 <= q90);
}

TEST_CASE("percentile_of is the CDF position") {
    auto m = gauss(7.0, 2.0);
    CHECK(percentile_of(m, 7.0) == doctest::Approx(0.5).epsilon(1e-12));
    auto mm = three_component();
    CHECK(percentile_of(mm, 4.0) == doctest::Approx(mixture_cdf(mm, 4.0)));
    // 95th-percentile threshold semantics used by the big-play flag
    const double v95 = mixture_quantile(mm, 0.95);
    CHECK(percentile_of(mm, v95 + 1e-6) >= 0.95);
    CHECK(percentile_of(mm, v95 - 1e-3) < 0.95);
}

TEST_CASE("mixture_mean and sampling") {
    ScalarMixture pm{{0.5, 0.5}, {-1.0, 1.0}, {0.3, 0.3}};
    CHECK(mixture_mean(pm) == doctest::Approx(0.0));

    auto mm = three_component();
    const double mean = mixture_mean(mm);
    std::mt19937_64 rng(31);
    const std::size_t n = 1000000;
    auto draws = sample(mm, rng, n);
    double acc = 0.0;
    for (double d : draws) acc += d;
    const double sample_mean = acc / n;
    // mixture sd is < 6 here; 4 sd / sqrt(n) band
    CHECK(std::abs(sample_mean - mean) < 4.0 * 6.0 / std::sqrt(static_cast<double>(n)));

    ScalarMixture tight{{1.0}, {3.5}, {1e-3}};
    auto few = sample(tight, rng, 100);
    for (double d : few) CHECK(d == doctest::Approx(3.5).epsilon(1e-2));

    CHECK_THROWS_AS(sample(tight, rng, 0), std::invalid_argument);
}

TEST_CASE("quadrature mass of mixtures is 1 within 1e-3") {
    CHECK(quadrature_mass(three_component()) == doctest::Approx(1.0).epsilon(1e-3));
    auto mix = demo_params();
    for (auto dim : {ContinuousDim::kMeters, ContinuousDim::kScoreFor, ContinuousDim::kScoreAgainst}) {
        CHECK(quadrature_mass(marginal_continuous(mix, dim)) == doctest::Approx(1.0).epsilon(1e-3));
    }
}
