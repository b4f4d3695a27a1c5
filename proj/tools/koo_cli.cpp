#include <algorithm>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "koo/bootstrap.hpp"
#include "koo/errors.hpp"
#include "koo/io.hpp"
#include "koo/kurtosis.hpp"
#include "koo/selector.hpp"
#include "koo/simlab.hpp"
#include "koo/statistics.hpp"

namespace {

using namespace koo;

struct Common {
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out;
    std::string format = "json";
};

struct DataArgs {
    std::string input;
    std::string responses;
    std::string predictors;
    std::string delimiter;
    bool log_responses = false;
    bool intercept = false;
    std::string keep;
    std::string bernoulli = "matched";
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
    cmd->add_option("--workers", c.workers, "worker threads (0 = hardware)")->capture_default_str();
    cmd->add_option("--out", c.out, "output file (default stdout)");
    cmd->add_option("--format", c.format, "json or tsv")->capture_default_str();
}

void add_data(CLI::App* cmd, DataArgs& d)
{
    cmd->add_option("--input", d.input, "CSV or TSV file with a header row")->required();
    cmd->add_option("--responses", d.responses, "response columns: names, 1-based positions, ranges")->required();
    cmd->add_option("--predictors", d.predictors, "predictor columns (default: all others)");
    cmd->add_option("--delimiter", d.delimiter, "comma or tab (default: detect)");
    cmd->add_flag("--log-responses", d.log_responses, "natural log of every response");
    cmd->add_flag("--intercept", d.intercept, "append an always-kept column of ones");
    cmd->add_option("--keep", d.keep, "1-based predictor ids that bypass selection");
    cmd->add_option("--bernoulli", d.bernoulli, "Bernoulli sampler root: matched or printed")->capture_default_str();
}

int resolve_workers(int workers)
{
    if (workers < 0) throw DomainError("--workers must be >= 0");
    if (workers == 0) return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return workers;
}

BernoulliConvention parse_bernoulli(const std::string& s)
{
    if (s == "matched") return BernoulliConvention::kurtosis_matched;
    if (s == "printed") return BernoulliConvention::printed;
    throw ParseError("--bernoulli must be matched or printed");
}

IngestedTable load(const DataArgs& d)
{
    IngestOptions opts;
    opts.responses = d.responses;
    opts.predictors = d.predictors;
    opts.log_responses = d.log_responses;
    opts.intercept = d.intercept;
    if (d.delimiter == "tab" || d.delimiter == "\\t" || d.delimiter == "\t") opts.delimiter = '\t';
    else if (d.delimiter == "comma" || d.delimiter == ",") opts.delimiter = ',';
    else if (!d.delimiter.empty()) throw ParseError("--delimiter must be comma or tab");
    IngestedTable table = ingest_table(d.input, opts);

    std::stringstream ss(d.keep);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        long id = 0;
        try {
            id = std::stol(tok);
        } catch (const std::exception&) {
            throw ParseError("--keep expects 1-based predictor ids, got '" + tok + "'");
        }
        if (id < 1 || id > table.data.dims().k) throw DomainError("--keep id " + tok + " out of range");
        if (std::find(table.always_keep.begin(), table.always_keep.end(), id - 1) == table.always_keep.end())
            table.always_keep.push_back(id - 1);
    }
    return table;
}

void emit(const Common& c, const nlohmann::json& j, const std::string& tsv)
{
    const OutputFormat fmt = parse_format(c.format);
    write_output(c.out, fmt == OutputFormat::json ? j.dump(2) + "\n" : tsv);
}

int run_select(const Common& c, const DataArgs& d, const std::string& rules_text)
{
    const auto specs = parse_rules(rules_text);
    const BernoulliConvention conv = parse_bernoulli(d.bernoulli);
    const IngestedTable table = load(d);
    const auto cache = make_projection_cache(table.data);
    const auto profile = koo_statistics(table.data, cache);
    const auto candidates = candidate_indices(table.data.dims().k, table.always_keep);

    SelectionContext ctx;
    ctx.predictor_names = table.predictor_names;
    ctx.seed = c.seed;
    ctx.bernoulli = conv;
    ctx.log_responses = d.log_responses;
    ctx.intercept = d.intercept;
    ctx.input = d.input;

    std::vector<SelectionRule> rules;
    std::map<int, std::vector<double>> maxima_by_n;
    for (const auto& spec : specs) {
        switch (spec.kind) {
        case RuleKind::kaic: rules.push_back(SelectionRule::kaic()); break;
        case RuleKind::kbic: rules.push_back(SelectionRule::kbic()); break;
        case RuleKind::kcp: rules.push_back(SelectionRule::kcp()); break;
        case RuleKind::fixed_margin: rules.push_back(SelectionRule::fixed_margin(spec.vartheta)); break;
        case RuleKind::kbt: {
            if (candidates.empty()) throw DomainError("no candidate predictors for KBT");
            if (!ctx.tau) {
                ctx.tau = excess_kurtosis_estimate(table.data, cache.residual_gram, cache.gram_inverse);
                ctx.sampler = matched_sampler(ctx.tau->tau_hat, conv);
            }
            BootstrapConfig boot;
            boot.nu = spec.nu;
            boot.n_reps = spec.n_reps;
            boot.seed = c.seed;
            boot.sampler = *ctx.sampler;
            boot.workers = resolve_workers(c.workers);
            auto it = maxima_by_n.find(spec.n_reps);
            if (it == maxima_by_n.end())
                it = maxima_by_n
                         .emplace(spec.n_reps, bootstrap_maxima(table.data.x(), cache.gram_inverse,
                                                                table.data.dims().p, boot, candidates))
                         .first;
            rules.push_back(SelectionRule::kbt(threshold_from_maxima(it->second, boot, false)));
            break;
        }
        }
    }
    const auto report = build_report(profile, rules, table.always_keep);
    emit(c, selection_report_json(report, ctx), selection_report_tsv(report, ctx));
    return 0;
}

int run_threshold(const Common& c, const DataArgs& d, double nu, int n_reps)
{
    const BernoulliConvention conv = parse_bernoulli(d.bernoulli);
    const IngestedTable table = load(d);
    const auto cache = make_projection_cache(table.data);
    const auto tau = excess_kurtosis_estimate(table.data, cache.residual_gram, cache.gram_inverse);
    BootstrapConfig boot;
    boot.nu = nu;
    boot.n_reps = n_reps;
    boot.seed = c.seed;
    boot.sampler = matched_sampler(tau.tau_hat, conv);
    boot.workers = resolve_workers(c.workers);
    const auto candidates = candidate_indices(table.data.dims().k, table.always_keep);
    const auto est = bootstrap_threshold(table.data, cache, boot, candidates);
    emit(c, threshold_json(est, table.data.dims(), tau, conv), threshold_tsv(est, table.data.dims(), tau));
    return 0;
}

struct SimArgs {
    std::string setting = "I";
    long n = 100;
    double c = 0.4;
    double alpha = 0.2;
    int error_case = 1;
    std::string law;
    int reps = 1000;
    int boot_reps = 1000;
    std::string rules = "kaic,kbic,kcp,kbt:nu=0,kbt:nu=0.05";
    std::string sampler = "matched";
    std::string bernoulli = "matched";
    bool fixed_design = false;
};

int run_simulate(const Common& c, const SimArgs& a)
{
    SimScenario s;
    if (a.setting == "I" || a.setting == "1") s.setting = Setting::I;
    else if (a.setting == "II" || a.setting == "2") s.setting = Setting::II;
    else throw ParseError("--setting must be I or II");
    s.n = a.n;
    s.c = a.c;
    s.alpha = a.alpha;
    s.error_law = a.law.empty() ? simulation_case_law(a.error_case) : ErrorDistSpec::parse(a.law);
    s.reps = a.reps;
    s.boot_reps = a.boot_reps;
    s.fixed_design = a.fixed_design;
    s.bernoulli = parse_bernoulli(a.bernoulli);
    if (a.sampler == "matched") {
        s.sampler_policy = SamplerPolicy::matched;
    } else {
        s.sampler_policy = SamplerPolicy::fixed;
        s.fixed_sampler = ErrorDistSpec::parse(a.sampler);
    }
    s.rules.clear();
    std::optional<int> rule_n;
    for (const auto& spec : parse_rules(a.rules)) {
        double param = 0.0;
        if (spec.kind == RuleKind::kbt) {
            param = spec.nu;
            if (rule_n && *rule_n != spec.n_reps)
                throw DomainError("all KBT rules in a simulation share one bootstrap N");
            rule_n = spec.n_reps;
        }
        if (spec.kind == RuleKind::fixed_margin) param = spec.vartheta;
        s.rules.push_back({spec.kind, param});
    }
    if (rule_n && *rule_n != 1000 && a.boot_reps == 1000) s.boot_reps = *rule_n;
    s.seed = c.seed;
    s.workers = resolve_workers(c.workers);

    const SimResult result = run_trials(s);
    emit(c, sim_tally_json(result), sim_tally_tsv(result));
    for (const auto& msg : result.failure_messages) std::cerr << "warning: " << msg << '\n';
    return 0;
}

struct VerifyArgs {
    std::string check = "limits";
    std::optional<long> n, p, k, q;
    std::optional<double> c, alpha, delta, nu, level;
    std::optional<int> reps, boot_reps;
    std::string law = "normal";
    std::string design = "random_uniform";
    std::string sampler = "matched";
};

DesignKind parse_design(const std::string& s)
{
    if (s == "random_uniform" || s == "random") return DesignKind::random_uniform;
    if (s == "rect_diagonal" || s == "diagonal") return DesignKind::rect_diagonal;
    throw ParseError("--design must be random_uniform or rect_diagonal");
}

int run_verify(const Common& c, const VerifyArgs& a)
{
    VerifyOptions opts;
    opts.seed = c.seed;
    opts.workers = resolve_workers(c.workers);
    opts.design = parse_design(a.design);
    const ErrorDistSpec law = ErrorDistSpec::parse(a.law);

    VerificationReport report;
    if (a.check == "limits") {
        report = verify_limits(a.n.value_or(2000), a.c.value_or(0.2), a.alpha.value_or(0.2), law,
                               a.reps.value_or(20), opts, a.delta.value_or(1.0));
    } else if (a.check == "clt-spurious") {
        report = verify_clt_spurious(a.n.value_or(1000), a.c.value_or(0.2), a.alpha.value_or(0.2),
                                     a.q.value_or(1), law, a.reps.value_or(2000), opts);
    } else if (a.check == "clt-true") {
        report = verify_clt_true(a.n.value_or(1000), a.c.value_or(0.2), a.alpha.value_or(0.2),
                                 a.delta.value_or(0.5), a.reps.value_or(2000), law, opts);
    } else if (a.check == "tau") {
        report = verify_tau(law, a.n.value_or(500), a.p.value_or(100), a.k.value_or(50),
                            a.reps.value_or(500), opts);
    } else if (a.check == "chisq") {
        report = verify_chisq_representation(a.n.value_or(200), a.p.value_or(40), a.k.value_or(40),
                                             a.reps.value_or(2000), opts, a.level.value_or(0.01));
    } else if (a.check == "fwer") {
        const SamplerPolicy policy = a.sampler == "matched" ? SamplerPolicy::matched : SamplerPolicy::fixed;
        report = verify_fwer(a.n.value_or(100), a.p.value_or(20), a.k.value_or(20), a.nu.value_or(0.05),
                             a.boot_reps.value_or(1000), a.reps.value_or(1000), opts, policy);
    } else {
        throw ParseError("unknown check '" + a.check + "'");
    }
    emit(c, verification_json(report), verification_tsv(report));
    return 0;
}

struct FigureArgs {
    std::string design = "random_uniform";
    long n = 2000, k = 600, p = 400;
    int draws = 2;
};

int run_figure1(const Common& c, const FigureArgs& a)
{
    VerifyOptions opts;
    opts.seed = c.seed;
    opts.workers = resolve_workers(c.workers);
    const auto result = figure1_experiment(parse_design(a.design), figure1_laws(), a.n, a.k, a.p, a.draws, opts);
    emit(c, figure1_json(result), figure1_tsv(result));
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"KOO variable selection for multivariate linear regression"};
    app.require_subcommand(1);

    Common common;
    DataArgs data;
    std::string rules = "kaic,kbic,kcp,kbt:nu=0.05,n=1000";
    auto* select = app.add_subcommand("select", "rank predictors and apply selection rules");
    add_data(select, data);
    add_common(select, common);
    select->add_option("--rules", rules, "rule list, e.g. kaic,kbt:nu=0.05,n=1000")->capture_default_str();

    double nu = 0.05;
    int n_boot = 1000;
    auto* threshold = app.add_subcommand("threshold", "bootstrap critical value for max_j K_j");
    add_data(threshold, data);
    add_common(threshold, common);
    threshold->add_option("--nu", nu, "significance level")->capture_default_str();
    threshold->add_option("--n-boot", n_boot, "bootstrap replicates N")->capture_default_str();

    SimArgs sim;
    auto* simulate = app.add_subcommand("simulate", "simulation study tallies");
    add_common(simulate, common);
    simulate->add_option("--setting", sim.setting, "I or II")->capture_default_str();
    simulate->add_option("--n", sim.n)->capture_default_str();
    simulate->add_option("--c", sim.c, "p/n")->capture_default_str();
    simulate->add_option("--alpha", sim.alpha, "k/n")->capture_default_str();
    simulate->add_option("--case", sim.error_case, "error case 1..6")->capture_default_str();
    simulate->add_option("--law", sim.law, "error law, overrides --case (e.g. chi2:12, t:3)");
    simulate->add_option("--reps", sim.reps)->capture_default_str();
    simulate->add_option("--boot-reps", sim.boot_reps, "inner bootstrap N")->capture_default_str();
    simulate->add_option("--rules", sim.rules)->capture_default_str();
    simulate->add_option("--sampler", sim.sampler, "matched, or a fixed law such as normal")->capture_default_str();
    simulate->add_option("--bernoulli", sim.bernoulli, "matched or printed")->capture_default_str();
    simulate->add_flag("--fixed-design", sim.fixed_design, "draw X once for all replicates");

    VerifyArgs ver;
    auto* verify = app.add_subcommand("verify", "Monte Carlo checks of the asymptotic results");
    add_common(verify, common);
    verify->add_option("--check", ver.check, "limits, clt-spurious, clt-true, tau, chisq, fwer")->capture_default_str();
    verify->add_option("--n", ver.n);
    verify->add_option("--p", ver.p);
    verify->add_option("--k", ver.k);
    verify->add_option("--q", ver.q);
    verify->add_option("--c", ver.c);
    verify->add_option("--alpha", ver.alpha);
    verify->add_option("--delta", ver.delta);
    verify->add_option("--nu", ver.nu);
    verify->add_option("--level", ver.level);
    verify->add_option("--reps", ver.reps, "replicates, draws or outer runs");
    verify->add_option("--boot-reps", ver.boot_reps);
    verify->add_option("--law", ver.law)->capture_default_str();
    verify->add_option("--design", ver.design)->capture_default_str();
    verify->add_option("--sampler", ver.sampler, "matched or normal (fwer)")->capture_default_str();

    FigureArgs fig;
    auto* figure1 = app.add_subcommand("figure1", "quartiles of spurious K_j across error laws");
    add_common(figure1, common);
    figure1->add_option("--design", fig.design)->capture_default_str();
    figure1->add_option("--n", fig.n)->capture_default_str();
    figure1->add_option("--k", fig.k)->capture_default_str();
    figure1->add_option("--p", fig.p)->capture_default_str();
    figure1->add_option("--draws", fig.draws)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*select) return run_select(common, data, rules);
        if (*threshold) return run_threshold(common, data, nu, n_boot);
        if (*simulate) return run_simulate(common, sim);
        if (*verify) return run_verify(common, ver);
        if (*figure1) return run_figure1(common, fig);
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const RankError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const SingularError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
