#include "koo/kurtosis.hpp"

#include <cmath>

namespace koo {

ErrorDistSpec matched_sampler(double tau_hat, BernoulliConvention convention)
{
    if (!std::isfinite(tau_hat) || tau_hat <= -2.0)
        throw DomainError("excess kurtosis must be finite and exceed -2");
    if (std::abs(tau_hat) < kTauDeadZone) return ErrorDistSpec::normal();
    if (tau_hat > 0.0) return ErrorDistSpec::chi_squared(12.0 / tau_hat);

    const double denom = convention == BernoulliConvention::kurtosis_matched ? 6.0 + tau_hat
                                                                             : 6.0 - tau_hat;
    const double var = 1.0 / denom;
    if (var > 0.25) throw DomainError("no Bernoulli law has excess kurtosis " + std::to_string(tau_hat));
    const double rho = 0.5 * (1.0 - std::sqrt(1.0 - 4.0 * var));
    return ErrorDistSpec::bernoulli(rho);
}

}  // namespace koo
