#pragma once

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace koo {

/// Error laws, each standardized to mean 0 and variance 1.
enum class ErrorLaw {
    standard_normal,
    standardized_chi_squared,   // (chi2(df) - df) / sqrt(2 df)
    standardized_bernoulli,     // (B(1, rho) - rho) / sqrt(rho (1 - rho))
    standardized_t,             // t(df) / sqrt(df / (df - 2))
    standardized_uniform,       // U(-sqrt 3, sqrt 3)
    standardized_poisson,       // (Pois(lambda) - lambda) / sqrt(lambda)
    standardized_exponential,   // Exp(1) - 1
};

struct ErrorDistSpec {
    ErrorLaw law = ErrorLaw::standard_normal;
    /// df for chi-square and t, rho for Bernoulli, lambda for Poisson.
    double param = 0.0;

    static ErrorDistSpec normal() { return {ErrorLaw::standard_normal, 0.0}; }
    static ErrorDistSpec chi_squared(double df);
    static ErrorDistSpec bernoulli(double rho);
    static ErrorDistSpec student_t(double df);
    static ErrorDistSpec uniform() { return {ErrorLaw::standardized_uniform, 0.0}; }
    static ErrorDistSpec poisson(double lambda);
    static ErrorDistSpec exponential() { return {ErrorLaw::standardized_exponential, 0.0}; }

    /// Population excess kurtosis; +infinity for t with df <= 4.
    double excess_kurtosis() const;
    /// Population third moment (all laws have unit variance).
    double skewness() const;

    /// Canonical text form, e.g. "normal", "chi2:12", "bernoulli:0.25", "t:10".
    std::string to_string() const;
    /// Inverse of to_string; throws ParseError / DomainError.
    static ErrorDistSpec parse(const std::string& text);

    friend bool operator==(const ErrorDistSpec&, const ErrorDistSpec&) = default;
};

using Rng = std::mt19937_64;

/// Seed for substream `index` of stream `tag` under a user seed. Counter
/// based, so any replicate can be regenerated without replaying the others.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index);

inline Rng substream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index)
{
    return Rng(derive_seed(seed, tag, index));
}

/// Fills `out` with i.i.d. draws from `spec`, column-major.
void fill_errors(const ErrorDistSpec& spec, Rng& rng, Eigen::Ref<Eigen::MatrixXd> out);

Eigen::MatrixXd sample_errors(const ErrorDistSpec& spec, Rng& rng, Eigen::Index rows,
                              Eigen::Index cols);

}  // namespace koo
