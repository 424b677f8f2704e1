#include "tte/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <string>

#include "tte/error.hpp"

namespace tte::theory {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, msg);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// Per-N stream so each curve point is independent of the others' sizes.
std::uint64_t mix(std::uint64_t seed, std::uint64_t n) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (n + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double simpson(double a, double fa, double fm, double b, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adaptive(F& f, double a, double fa, double b, double fb, double m, double fm, double whole, double tol,
                int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(a, fa, flm, m, fm);
    const double right = simpson(m, fm, frm, b, fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adaptive(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

void DecompositionSimConfig::validate() const {
    require(k >= 1, "k must be >= 1");
    require(op_marginals.size() == static_cast<std::size_t>(k), "op_marginals needs one entry per op");
    for (double p : op_marginals) require(p >= 0.0 && p <= 1.0, "marginals must lie in [0, 1]");
    require(p_partial >= 0.0 && p_partial <= 1.0, "p_partial must lie in [0, 1]");
    require(num_queries >= 1, "num_queries must be >= 1");
}

DecompositionGain simulate_decomposition_gain(const DecompositionSimConfig& c) {
    c.validate();
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto k = static_cast<std::size_t>(c.k);
    std::vector<char> need(k);

    auto draw_marginals = [&] {
        for (std::size_t i = 0; i < k; ++i) need[i] = unit(rng) < c.op_marginals[i];
    };
    auto all_needed = [&] { return std::all_of(need.begin(), need.end(), [](char x) { return x != 0; }); };

    double atomic = 0.0, mono = 0.0, sum = 0.0, sum_sq = 0.0;
    for (std::uint64_t q = 0; q < c.num_queries; ++q) {
        if (c.joint_model == JointModel::Independent) {
            draw_marginals();
        } else if (unit(rng) >= c.p_partial) {
            std::fill(need.begin(), need.end(), 1);
        } else {
            // Proper subset: rejection sampling, then a forced drop if the
            // marginals make the full set (near) certain.
            int tries = 0;
            do {
                draw_marginals();
            } while (all_needed() && ++tries < 1000);
            if (all_needed()) need[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)] = 0;
        }
        double xi = 0.0;
        for (char x : need) xi += x;
        const double xt = all_needed() ? 1.0 : 0.0;
        atomic += xi;
        mono += xt;
        const double g = xi - static_cast<double>(k) * xt;
        sum += g;
        sum_sq += g * g;
    }
    const double m = static_cast<double>(c.num_queries);
    DecompositionGain out;
    out.atomic_sum = atomic;
    out.k_times_mono = static_cast<double>(k) * mono;
    out.gap = out.atomic_sum - out.k_times_mono;
    const double mean = sum / m;
    const double var = m > 1 ? std::max(0.0, (sum_sq - m * mean * mean) / (m - 1)) : 0.0;
    out.gap_stderr = std::sqrt(m) * std::sqrt(var);
    return out;
}

double Gaussian::pdf(double x) const {
    const double z = (x - mean) / stddev;
    return std::exp(-0.5 * z * z) / (stddev * std::sqrt(2.0 * M_PI));
}

double Gaussian::cdf(double x) const { return 0.5 * std::erfc(-(x - mean) / (stddev * std::sqrt(2.0))); }

void RetrievalNoiseModel::validate() const {
    require(relevant.stddev > 0.0 && noise.stddev > 0.0, "stddevs must be positive");
    require(!n_values.empty(), "n_values must not be empty");
    for (auto n : n_values) require(n >= 1, "library sizes must be >= 1");
    require(samples >= 1, "samples must be >= 1");
}

double retrieval_success_quadrature(const Gaussian& relevant, const Gaussian& noise, std::uint64_t n) {
    require(n >= 1, "library size must be >= 1");
    require(relevant.stddev > 0.0 && noise.stddev > 0.0, "stddevs must be positive");
    if (n == 1) return 1.0;
    const double power = static_cast<double>(n - 1);
    auto f = [&](double s) {
        const double F = noise.cdf(s);
        return (F <= 0.0 ? 0.0 : std::pow(F, power)) * relevant.pdf(s);
    };
    const double lo = std::min(relevant.mean - 8.0 * relevant.stddev, noise.mean - 8.0 * noise.stddev);
    const double hi = std::max(relevant.mean + 8.0 * relevant.stddev, noise.mean + 8.0 * noise.stddev);
    constexpr int kPanels = 64;
    constexpr double kTol = 1e-12;
    const double h = (hi - lo) / kPanels;
    double total = 0.0;
    for (int i = 0; i < kPanels; ++i) {
        const double a = lo + h * i, b = (i + 1 == kPanels) ? hi : lo + h * (i + 1), m = 0.5 * (a + b);
        const double fa = f(a), fb = f(b), fm = f(m);
        total += adaptive(f, a, fa, b, fb, m, fm, simpson(a, fa, fm, b, fb), kTol / kPanels, 40);
    }
    return total;
}

std::vector<RetrievalPoint> retrieval_success_curve(const RetrievalNoiseModel& model) {
    model.validate();
    std::vector<RetrievalPoint> out;
    for (std::uint64_t n : model.n_values) {
        std::mt19937_64 rng(mix(model.seed, n));
        std::normal_distribution<double> rel(model.relevant.mean, model.relevant.stddev);
        std::normal_distribution<double> noi(model.noise.mean, model.noise.stddev);
        std::uint64_t wins = 0;
        for (std::uint64_t s = 0; s < model.samples; ++s) {
            const double sr = rel(rng);
            bool strict_max = true;
            for (std::uint64_t i = 1; i < n; ++i) {
                if (noi(rng) >= sr) strict_max = false;  // keep drawing: fixed draws per sample
            }
            wins += strict_max ? 1 : 0;
        }
        out.push_back({n, static_cast<double>(wins) / static_cast<double>(model.samples),
                       retrieval_success_quadrature(model.relevant, model.noise, n)});
    }
    return out;
}

void GrowthParams::validate() const {
    require(lambda_g > 0.0 && lambda_p > 0.0 && k_cap > 0.0, "rates and capacity must be positive");
    require(l0 >= 0.0, "L0 must be >= 0");
    require(!dt || *dt > 0.0, "dt must be positive");
    require(!horizon || *horizon > 0.0, "horizon must be positive");
    require(!dt || !horizon || *dt <= *horizon, "dt must not exceed the horizon");
    require(record_stride >= 1, "record_stride must be >= 1");
}

GrowthResult library_growth(const GrowthParams& p) {
    p.validate();
    const double A = p.lambda_g, B = p.b();
    const double horizon = p.horizon.value_or(20.0 / B);
    const double dt = p.dt.value_or(1e-3 / B);
    GrowthResult out;
    out.l_star = p.l_star();
    auto closed = [&](double t) { return out.l_star + (p.l0 - out.l_star) * std::exp(-B * t); };
    auto rhs = [&](double l) { return A - B * l; };

    const auto steps = static_cast<std::uint64_t>(std::ceil(horizon / dt - 1e-9));
    double l = p.l0;
    out.trajectory.push_back({0.0, l, closed(0.0)});
    for (std::uint64_t i = 1; i <= steps; ++i) {
        const double t0 = dt * static_cast<double>(i - 1);
        const double t1 = (i == steps) ? horizon : dt * static_cast<double>(i);
        const double h = t1 - t0;
        const double k1 = rhs(l);
        const double k2 = rhs(l + 0.5 * h * k1);
        const double k3 = rhs(l + 0.5 * h * k2);
        const double k4 = rhs(l + h * k3);
        l += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double lc = closed(t1);
        out.max_abs_error = std::max(out.max_abs_error, std::abs(l - lc));
        if (i % p.record_stride == 0 || i == steps) out.trajectory.push_back({t1, l, lc});
    }
    return out;
}

void write_csv(std::ostream& out, const DecompositionGain& g) {
    out << "atomic_sum,k_times_mono,gap,gap_stderr\n"
        << fmt(g.atomic_sum) << ',' << fmt(g.k_times_mono) << ',' << fmt(g.gap) << ',' << fmt(g.gap_stderr) << '\n';
}

void write_csv(std::ostream& out, const std::vector<RetrievalPoint>& curve) {
    out << "N,p_mc,p_quad\n";
    for (const auto& pt : curve) out << pt.n << ',' << fmt(pt.p_mc) << ',' << fmt(pt.p_quad) << '\n';
}

void write_csv(std::ostream& out, const GrowthResult& g) {
    out << "t,L_numeric,L_closed\n";
    for (const auto& s : g.trajectory) out << fmt(s.t) << ',' << fmt(s.l_numeric) << ',' << fmt(s.l_closed) << '\n';
}

}  // namespace tte::theory
