#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace tte::theory {

// ---- reuse of atomic vs. monolithic tools ----

enum class JointModel { Independent, AllOrSubset };

struct DecompositionSimConfig {
    int k = 3;
    std::vector<double> op_marginals{0.5, 0.5, 0.5};  // P(a_i in S(q)), one per op
    JointModel joint_model = JointModel::Independent;
    // AllOrSubset: with probability 1 - p_partial a query needs every op;
    // otherwise it needs a proper subset drawn from the marginals.
    double p_partial = 0.0;
    std::uint64_t num_queries = 100'000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct DecompositionGain {
    double atomic_sum = 0.0;    // sum_i R(A_i)
    double k_times_mono = 0.0;  // k * R(T)
    double gap = 0.0;           // atomic_sum - k_times_mono
    double gap_stderr = 0.0;    // sqrt(M) * sd of the per-query gap
};

DecompositionGain simulate_decomposition_gain(const DecompositionSimConfig& config);

// ---- retrieval success against N - 1 distractors ----

struct Gaussian {
    double mean = 0.0;
    double stddev = 1.0;

    double pdf(double x) const;
    double cdf(double x) const;
};

struct RetrievalNoiseModel {
    Gaussian relevant{0.7, 0.1};
    Gaussian noise{0.4, 0.1};
    std::vector<std::uint64_t> n_values{1, 2, 4, 8, 16, 32, 64};
    std::uint64_t samples = 100'000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct RetrievalPoint {
    std::uint64_t n = 1;
    double p_mc = 0.0;
    double p_quad = 0.0;
};

// Integral of F_n(s)^(N-1) f_r(s) by adaptive Simpson; exactly 1 for N = 1.
double retrieval_success_quadrature(const Gaussian& relevant, const Gaussian& noise, std::uint64_t n);

std::vector<RetrievalPoint> retrieval_success_curve(const RetrievalNoiseModel& model);

// ---- library-size dynamics dL/dt = g (1 - L/K) - p L ----

struct GrowthParams {
    double lambda_g = 10.0;
    double lambda_p = 0.1;
    double k_cap = 500.0;
    double l0 = 0.0;
    std::optional<double> horizon;  // default 20 / B
    std::optional<double> dt;       // default 1e-3 / B
    std::uint64_t record_stride = 1;

    double b() const { return lambda_g / k_cap + lambda_p; }
    double l_star() const { return lambda_g * k_cap / (lambda_g + lambda_p * k_cap); }
    void validate() const;
};

struct GrowthSample {
    double t = 0.0;
    double l_numeric = 0.0;
    double l_closed = 0.0;
};

struct GrowthResult {
    std::vector<GrowthSample> trajectory;  // first and last point always present
    double l_star = 0.0;
    double max_abs_error = 0.0;  // over every integration step, not only recorded ones
};

// Classical RK4; the final step is shortened to land on the horizon.
GrowthResult library_growth(const GrowthParams& params);

void write_csv(std::ostream& out, const DecompositionGain& gain);
void write_csv(std::ostream& out, const std::vector<RetrievalPoint>& curve);
void write_csv(std::ostream& out, const GrowthResult& growth);

}  // namespace tte::theory
