#include "koo/distributions.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "koo/errors.hpp"

namespace koo {

ErrorDistSpec ErrorDistSpec::chi_squared(double df)
{
    if (!(df > 0.0) || !std::isfinite(df)) throw DomainError("chi-square df must be positive");
    return {ErrorLaw::standardized_chi_squared, df};
}

ErrorDistSpec ErrorDistSpec::bernoulli(double rho)
{
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("Bernoulli rho must lie in (0, 1)");
    return {ErrorLaw::standardized_bernoulli, rho};
}

ErrorDistSpec ErrorDistSpec::student_t(double df)
{
    // Finite variance is needed for the standardization.
    if (!(df > 2.0)) throw DomainError("t df must exceed 2");
    return {ErrorLaw::standardized_t, df};
}

ErrorDistSpec ErrorDistSpec::poisson(double lambda)
{
    if (!(lambda > 0.0)) throw DomainError("Poisson lambda must be positive");
    return {ErrorLaw::standardized_poisson, lambda};
}

double ErrorDistSpec::excess_kurtosis() const
{
    switch (law) {
    case ErrorLaw::standard_normal: return 0.0;
    case ErrorLaw::standardized_chi_squared: return 12.0 / param;
    case ErrorLaw::standardized_bernoulli: return 1.0 / (param * (1.0 - param)) - 6.0;
    case ErrorLaw::standardized_t:
        return param > 4.0 ? 6.0 / (param - 4.0) : std::numeric_limits<double>::infinity();
    case ErrorLaw::standardized_uniform: return -1.2;
    case ErrorLaw::standardized_poisson: return 1.0 / param;
    case ErrorLaw::standardized_exponential: return 6.0;
    }
    return 0.0;
}

double ErrorDistSpec::skewness() const
{
    switch (law) {
    case ErrorLaw::standardized_chi_squared: return std::sqrt(8.0 / param);
    case ErrorLaw::standardized_bernoulli:
        return (1.0 - 2.0 * param) / std::sqrt(param * (1.0 - param));
    case ErrorLaw::standardized_poisson: return 1.0 / std::sqrt(param);
    case ErrorLaw::standardized_exponential: return 2.0;
    default: return 0.0;
    }
}

namespace {

std::string format_param(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::string ErrorDistSpec::to_string() const
{
    switch (law) {
    case ErrorLaw::standard_normal: return "normal";
    case ErrorLaw::standardized_chi_squared: return "chi2:" + format_param(param);
    case ErrorLaw::standardized_bernoulli: return "bernoulli:" + format_param(param);
    case ErrorLaw::standardized_t: return "t:" + format_param(param);
    case ErrorLaw::standardized_uniform: return "uniform";
    case ErrorLaw::standardized_poisson: return "poisson:" + format_param(param);
    case ErrorLaw::standardized_exponential: return "exponential";
    }
    return "normal";
}

ErrorDistSpec ErrorDistSpec::parse(const std::string& text)
{
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    double value = 0.0;
    const bool has_value = colon != std::string::npos;
    if (has_value) {
        const std::string rest = text.substr(colon + 1);
        std::size_t used = 0;
        try {
            value = std::stod(rest, &used);
        } catch (const std::exception&) {
            throw ParseError("bad distribution parameter in '" + text + "'");
        }
        if (used != rest.size()) throw ParseError("bad distribution parameter in '" + text + "'");
    }
    auto need = [&](bool want) {
        if (want != has_value)
            throw ParseError("distribution '" + name + (want ? "' needs" : "' takes no") +
                             " parameter");
    };
    if (name == "normal") { need(false); return normal(); }
    if (name == "uniform") { need(false); return uniform(); }
    if (name == "exponential") { need(false); return exponential(); }
    if (name == "chi2") { need(true); return chi_squared(value); }
    if (name == "bernoulli") { need(true); return bernoulli(value); }
    if (name == "t") { need(true); return student_t(value); }
    if (name == "poisson") { need(true); return poisson(value); }
    throw ParseError("unknown distribution '" + name + "'");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index)
{
    // splitmix64 finalizer applied to a running combination.
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(seed) ^ tag) ^ index);
}

namespace {

template <typename Dist, typename F>
void fill_with(Dist dist, Rng& rng, Eigen::Ref<Eigen::MatrixXd> out, F transform)
{
    for (Eigen::Index c = 0; c < out.cols(); ++c)
        for (Eigen::Index r = 0; r < out.rows(); ++r) out(r, c) = transform(dist(rng));
}

}  // namespace

void fill_errors(const ErrorDistSpec& spec, Rng& rng, Eigen::Ref<Eigen::MatrixXd> out)
{
    switch (spec.law) {
    case ErrorLaw::standard_normal:
        fill_with(boost::random::normal_distribution<double>(), rng, out, [](double v) { return v; });
        return;
    case ErrorLaw::standardized_chi_squared: {
        const double df = spec.param;
        const double scale = 1.0 / std::sqrt(2.0 * df);
        fill_with(std::chi_squared_distribution<double>(df), rng, out,
                  [=](double v) { return (v - df) * scale; });
        return;
    }
    case ErrorLaw::standardized_bernoulli: {
        const double rho = spec.param;
        const double scale = 1.0 / std::sqrt(rho * (1.0 - rho));
        fill_with(boost::random::bernoulli_distribution<double>(rho), rng, out,
                  [=](bool b) { return ((b ? 1.0 : 0.0) - rho) * scale; });
        return;
    }
    case ErrorLaw::standardized_t: {
        const double df = spec.param;
        const double scale = std::sqrt((df - 2.0) / df);
        fill_with(std::student_t_distribution<double>(df), rng, out,
                  [=](double v) { return v * scale; });
        return;
    }
    case ErrorLaw::standardized_uniform: {
        const double half = std::sqrt(3.0);
        fill_with(boost::random::uniform_real_distribution<double>(-half, half), rng, out,
                  [](double v) { return v; });
        return;
    }
    case ErrorLaw::standardized_poisson: {
        const double lambda = spec.param;
        const double scale = 1.0 / std::sqrt(lambda);
        fill_with(boost::random::poisson_distribution<int, double>(lambda), rng, out,
                  [=](int v) { return (static_cast<double>(v) - lambda) * scale; });
        return;
    }
    case ErrorLaw::standardized_exponential:
        fill_with(boost::random::exponential_distribution<double>(1.0), rng, out,
                  [](double v) { return v - 1.0; });
        return;
    }
}

Eigen::MatrixXd sample_errors(const ErrorDistSpec& spec, Rng& rng, Eigen::Index rows,
                              Eigen::Index cols)
{
    Eigen::MatrixXd out(rows, cols);
    fill_errors(spec, rng, out);
    return out;
}

}  // namespace koo
