#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

// Self-contained random number streams. Every consumer of randomness in the
// library derives its stream from (master_seed, stream_index) so that work
// items (PBA draws, grid points, simulation replications) can run in any
// order, on any number of threads, and still produce identical results.
// Distributions are implemented here rather than taken from <random> because
// the standard leaves their algorithms unspecified, which would tie output
// streams to a particular standard library.

namespace enrt::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Collapse (master seed, stream index) into a single well-mixed seed.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master + 0x9E3779B97F4A7C15ull * (stream + 1);
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b + 0x94D049BB133111EBull);
}

/// xoshiro256++ generator, seeded through SplitMix64.
class Stream {
public:
    explicit Stream(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& word : state_) word = splitmix64(s);
    }
    Stream(std::uint64_t master, std::uint64_t stream)
        : Stream(substream_seed(master, stream)) {}

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on the open interval (0,1); never returns an exact endpoint.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// lo..hi inclusive.
    long long discrete_uniform(long long lo, long long hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<long long>(next_u64() % span);
    }

    double normal() { return normal_quantile(uniform()); }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    double lognormal(double meanlog, double sdlog) {
        return std::exp(normal(meanlog, sdlog));
    }

    double gamma(double shape, double scale) {
        if (shape <= 0 || scale <= 0) throw std::invalid_argument("gamma: nonpositive parameter");
        if (shape < 1.0) {
            // Boost a Gamma(shape+1) draw down (Marsaglia-Tsang, sec. 6).
            const double u = uniform();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0) continue;
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

    long long poisson(double mean) {
        if (mean < 0) throw std::invalid_argument("poisson: negative mean");
        if (mean == 0) return 0;
        // Product-of-uniforms method; split large means so exp(-mean) stays normal.
        if (mean > 500.0) return poisson(mean / 2.0) + poisson(mean - mean / 2.0);
        const double limit = std::exp(-mean);
        long long k = 0;
        double prod = uniform();
        while (prod > limit) {
            ++k;
            prod *= uniform();
        }
        return k;
    }

    /// Negative binomial parameterized by mean and size; variance = mean + mean^2/size.
    long long neg_binomial(double mean, double size) {
        if (size <= 0) throw std::invalid_argument("neg_binomial: size must be positive");
        return poisson(gamma(size, mean / size));
    }

    double beta(double a, double b) {
        const double x = gamma(a, 1.0);
        const double y = gamma(b, 1.0);
        return x / (x + y);
    }

    /// Inverse standard-normal CDF (Acklam's rational approximation, |err| < 1.15e-9).
    static double normal_quantile(double p) {
        if (!(p > 0.0 && p < 1.0)) {
            if (p == 0.0) return -std::numeric_limits<double>::infinity();
            if (p == 1.0) return std::numeric_limits<double>::infinity();
            throw std::invalid_argument("normal_quantile: p outside [0,1]");
        }
        static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                       -2.759285104469687e+02, 1.383577518672690e+02,
                                       -3.066479806614716e+01, 2.506628277459239e+00};
        static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                       -1.556989798598866e+02, 6.680131188771972e+01,
                                       -1.328068155288572e+01};
        static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                       -2.400758277161838e+00, -2.549732539343734e+00,
                                       4.374664141464968e+00,  2.938163982698783e+00};
        static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                       2.445134137142996e+00, 3.754408661907416e+00};
        constexpr double p_low = 0.02425;
        double q, r;
        if (p < p_low) {
            q = std::sqrt(-2.0 * std::log(p));
            return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
                   ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
        }
        if (p <= 1.0 - p_low) {
            q = p - 0.5;
            r = q * q;
            return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
                   (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
        }
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

/// Kahan compensated accumulator for order-stable reductions.
class KahanSum {
public:
    void add(double x) {
        const double y = x - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace enrt::rng
