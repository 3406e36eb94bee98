#include "tryline/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tryline {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

void ScalarMixture::validate() const {
    if (weights.empty() || mu.size() != weights.size() || sigma.size() != weights.size()) {
        throw std::invalid_argument("ScalarMixture: component arrays must be equal, non-empty");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (!(weights[k] >= 0.0)) throw std::invalid_argument("ScalarMixture: negative weight");
        if (!(sigma[k] > 0.0)) throw std::invalid_argument("ScalarMixture: non-positive sigma");
        sum += weights[k];
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("ScalarMixture: weights sum to " + std::to_string(sum));
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z * kInvSqrt2);
}

ScalarMixture marginal_continuous(const MixtureParams& mix, ContinuousDim dim) {
    const int d = static_cast<int>(dim);
    if (d < 0 || d >= kContinuousDims) throw std::invalid_argument("marginal_continuous: bad dim");
    ScalarMixture m;
    m.weights = mix.weights;
    m.mu.reserve(mix.mixtures);
    m.sigma.reserve(mix.mixtures);
    for (int k = 0; k < mix.mixtures; ++k) {
        m.mu.push_back(mix.mu[k * kContinuousDims + d]);
        m.sigma.push_back(mix.sigma[k * kContinuousDims + d]);
    }
    return m;
}

ScalarMixture marginal_score_diff(const MixtureParams& mix) {
    ScalarMixture m;
    m.weights = mix.weights;
    m.mu.reserve(mix.mixtures);
    m.sigma.reserve(mix.mixtures);
    const int df = static_cast<int>(ContinuousDim::kScoreFor);
    const int da = static_cast<int>(ContinuousDim::kScoreAgainst);
    for (int k = 0; k < mix.mixtures; ++k) {
        const double sf = mix.sigma[k * kContinuousDims + df];
        const double sa = mix.sigma[k * kContinuousDims + da];
        m.mu.push_back(mix.mu[k * kContinuousDims + df] - mix.mu[k * kContinuousDims + da]);
        m.sigma.push_back(std::sqrt(sf * sf + sa * sa));
    }
    return m;
}

double bernoulli_mean(const MixtureParams& mix, BinaryDim dim) {
    const int d = static_cast<int>(dim);
    double acc = 0.0;
    for (int k = 0; k < mix.mixtures; ++k) acc += mix.weights[k] * mix.p[k * kBinaryDims + d];
    return acc;
}

double mixture_pdf(const ScalarMixture& m, double v) {
    double acc = 0.0;
    for (std::size_t k = 0; k < m.components(); ++k) {
        const double z = (v - m.mu[k]) / m.sigma[k];
        acc += m.weights[k] * kInvSqrt2Pi * std::exp(-0.5 * z * z) / m.sigma[k];
    }
    return acc;
}

double mixture_cdf(const ScalarMixture& m, double v) {
    double acc = 0.0;
    for (std::size_t k = 0; k < m.components(); ++k) {
        acc += m.weights[k] * normal_cdf((v - m.mu[k]) / m.sigma[k]);
    }
    return acc;
}

double mixture_quantile(const ScalarMixture& m, double q) {
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("mixture_quantile: q = " + std::to_string(q) +
                                    " outside (0,1)");
    const auto [mu_min, mu_max] = std::minmax_element(m.mu.begin(), m.mu.end());
    const double sigma_max = *std::max_element(m.sigma.begin(), m.sigma.end());
    double lo = *mu_min - 10.0 * sigma_max;
    double hi = *mu_max + 10.0 * sigma_max;
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double c = mixture_cdf(m, mid);
        if (std::abs(c - q) <= 1e-9) return mid;
        if (c < q) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-13 * std::max(1.0, std::abs(mid))) break;
    }
    return mid;
}

double percentile_of(const ScalarMixture& m, double observed) {
    return mixture_cdf(m, observed);
}

double mixture_mean(const ScalarMixture& m) {
    double acc = 0.0;
    for (std::size_t k = 0; k < m.components(); ++k) acc += m.weights[k] * m.mu[k];
    return acc;
}

double sample_one(const ScalarMixture& m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double cum = 0.0;
    std::size_t k = m.components() - 1;
    for (std::size_t i = 0; i < m.components(); ++i) {
        cum += m.weights[i];
        if (u <= cum) {
            k = i;
            break;
        }
    }
    std::normal_distribution<double> gauss(m.mu[k], m.sigma[k]);
    return gauss(rng);
}

std::vector<double> sample(const ScalarMixture& m, std::mt19937_64& rng, std::size_t n) {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    std::vector<double> out(n);
    for (double& v : out) v = sample_one(m, rng);
    return out;
}

}  // namespace tryline
