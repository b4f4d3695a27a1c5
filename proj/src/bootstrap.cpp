#include "koo/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>

#include "koo/errors.hpp"
#include "koo/parallel.hpp"

namespace koo {

namespace {

constexpr std::uint64_t kBootstrapStream = 0xb007'0001;
constexpr std::uint64_t kRetryStream = 0xb007'0002;

struct Scratch {
    Eigen::MatrixXd errors;
    Eigen::MatrixXd cross;    // X'E, k x p
    Eigen::MatrixXd weighted; // G X'E, k x p
    Eigen::MatrixXd gram;     // E'QE, p x p
    Eigen::MatrixXd rhs;      // p x |candidates|
};

/// max_j K~_j for one draw, or nullopt when E~'QE~ is not positive definite.
std::optional<double> replicate_max(const Eigen::MatrixXd& X, const Eigen::MatrixXd& G,
                                    const Eigen::VectorXd& inv_sqrt_g,
                                    const std::vector<Index>& cand, const ErrorDistSpec& sampler,
                                    Rng rng, Scratch& s)
{
    fill_errors(sampler, rng, s.errors);

    s.gram.setZero();
    s.gram.selfadjointView<Eigen::Lower>().rankUpdate(s.errors.transpose());
    if (X.cols() > 0) {
        s.cross.noalias() = X.transpose() * s.errors;
        s.weighted.noalias() = G * s.cross;
        s.gram.noalias() -= s.cross.transpose() * s.weighted;
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(s.gram);
    if (llt.info() != Eigen::Success) return std::nullopt;

    // A'E~ = D^{-1/2} G X'E~, so the right-hand sides are rows of G X'E~.
    for (std::size_t c = 0; c < cand.size(); ++c)
        s.rhs.col(static_cast<Index>(c)) = s.weighted.row(cand[c]).transpose() * inv_sqrt_g(cand[c]);
    llt.matrixL().solveInPlace(s.rhs);
    return s.rhs.colwise().squaredNorm().maxCoeff();
}

}  // namespace

std::string to_string(RuleKind kind)
{
    switch (kind) {
    case RuleKind::kbt: return "KBT";
    case RuleKind::kaic: return "KAIC";
    case RuleKind::kbic: return "KBIC";
    case RuleKind::kcp: return "KCp";
    case RuleKind::fixed_margin: return "FixedMargin";
    }
    return "?";
}

void BootstrapConfig::validate() const
{
    if (!(nu >= 0.0 && nu < 1.0)) throw DomainError("nu must lie in [0, 1)");
    if (n_reps < 1) throw DomainError("bootstrap replicate count N must be >= 1");
}

double quantile_order_statistic(std::span<const double> sorted_maxima, double nu)
{
    if (sorted_maxima.empty()) throw DomainError("no bootstrap maxima");
    if (!(nu >= 0.0 && nu < 1.0)) throw DomainError("nu must lie in [0, 1)");
    const auto n = static_cast<double>(sorted_maxima.size());
    // The small slack keeps products like 0.95 * 1000 from rounding up past 950.
    auto rank = static_cast<std::size_t>(std::ceil((1.0 - nu) * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted_maxima.size());
    return sorted_maxima[rank - 1];
}

std::vector<double> bootstrap_maxima(const Eigen::MatrixXd& X, const Eigen::MatrixXd& gram_inv,
                                     Index p, const BootstrapConfig& config,
                                     std::span<const Index> candidates)
{
    config.validate();
    const Index n = X.rows();
    const Index k = X.cols();
    if (n <= p + k) throw DimensionError("bootstrap needs n > p + k");

    std::vector<Index> cand(candidates.begin(), candidates.end());
    if (cand.empty()) {
        cand.resize(static_cast<std::size_t>(k));
        std::iota(cand.begin(), cand.end(), Index{0});
    }
    for (Index j : cand)
        if (j < 0 || j >= k) throw DomainError("candidate index out of range");
    if (cand.empty()) throw DomainError("no candidate predictors for the bootstrap");

    const Eigen::VectorXd inv_sqrt_g = gram_inv.diagonal().cwiseSqrt().cwiseInverse();
    const int workers = std::max(1, config.workers);
    std::vector<Scratch> scratch(static_cast<std::size_t>(workers));
    for (auto& s : scratch) {
        s.errors.resize(n, p);
        s.cross.resize(k, p);
        s.weighted.resize(k, p);
        s.gram.resize(p, p);
        s.rhs.resize(p, static_cast<Index>(cand.size()));
    }

    std::vector<double> maxima(static_cast<std::size_t>(config.n_reps));
    parallel_for(config.n_reps, workers, [&](Index r, int worker) {
        Scratch& s = scratch[static_cast<std::size_t>(worker)];
        const auto idx = static_cast<std::uint64_t>(r);
        auto value = replicate_max(X, gram_inv, inv_sqrt_g, cand, config.sampler,
                                   substream(config.seed, kBootstrapStream, idx), s);
        if (!value)
            value = replicate_max(X, gram_inv, inv_sqrt_g, cand, config.sampler,
                                  substream(config.seed, kRetryStream, idx), s);
        if (!value)
            throw SingularError("bootstrap replicate " + std::to_string(r) +
                                ": E'QE not positive definite after retry");
        maxima[static_cast<std::size_t>(r)] = *value;
    });
    std::sort(maxima.begin(), maxima.end());
    return maxima;
}

ThresholdEstimate threshold_from_maxima(std::vector<double> sorted_maxima,
                                        const BootstrapConfig& config, bool retain_maxima)
{
    ThresholdEstimate est;
    est.value = quantile_order_statistic(sorted_maxima, config.nu);
    est.rule = RuleKind::kbt;
    est.nu = config.nu;
    est.n_reps = static_cast<int>(sorted_maxima.size());
    est.seed = config.seed;
    est.sampler = config.sampler;
    if (retain_maxima) est.bootstrap_maxima = std::move(sorted_maxima);
    return est;
}

ThresholdEstimate bootstrap_threshold(const RegressionDataset<double>& data,
                                      const ProjectionCache<double>& cache,
                                      const BootstrapConfig& config,
                                      std::span<const Index> candidates, bool retain_maxima)
{
    auto maxima = bootstrap_maxima(data.x(), cache.gram_inverse, data.dims().p, config, candidates);
    return threshold_from_maxima(std::move(maxima), config, retain_maxima);
}

}  // namespace koo
