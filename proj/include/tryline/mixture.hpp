#pragma once

#include <random>
#include <vector>

#include "tryline/mdn.hpp"

namespace tryline {

// One-dimensional Gaussian mixture, the query surface behind every analytic:
// means, CDFs, quantiles, percentiles, samples.
struct ScalarMixture {
    std::vector<double> weights;
    std::vector<double> mu;
    std::vector<double> sigma;

    std::size_t components() const { return weights.size(); }
    void validate() const;  // throws std::invalid_argument
};

// Standard normal CDF via the complementary error function.
double normal_cdf(double z);

ScalarMixture marginal_continuous(const MixtureParams& mix, ContinuousDim dim);
// Final score differential (for - against): per component the difference of
// independent Gaussians, so means subtract and variances add.
ScalarMixture marginal_score_diff(const MixtureParams& mix);
// Mixture-weighted Bernoulli mean: exTryTackle / exTrySet / win probability.
double bernoulli_mean(const MixtureParams& mix, BinaryDim dim);

double mixture_pdf(const ScalarMixture& m, double v);
double mixture_cdf(const ScalarMixture& m, double v);
// Inverse CDF by bisection over [min mu - 10 max sigma, max mu + 10 max sigma].
double mixture_quantile(const ScalarMixture& m, double q);
// CDF position of an observed value; >= 0.95 marks a top-5% play.
double percentile_of(const ScalarMixture& m, double observed);
double mixture_mean(const ScalarMixture& m);
double sample_one(const ScalarMixture& m, std::mt19937_64& rng);
std::vector<double> sample(const ScalarMixture& m, std::mt19937_64& rng, std::size_t n);

}  // namespace tryline
