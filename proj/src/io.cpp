#include "koo/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "koo/errors.hpp"

namespace koo {

using nlohmann::json;

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return s;
}

bool is_missing(const std::string& cell)
{
    const std::string t = lower(cell);
    return t.empty() || t == "na" || t == "nan" || t == "null" || t == "?";
}

std::optional<double> parse_number(const std::string& cell)
{
    const char* first = cell.data();
    const char* last = first + cell.size();
    if (first != last && *first == '+') ++first;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

std::optional<long> parse_position(const std::string& s)
{
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char ch) { return std::isdigit(ch); }))
        return std::nullopt;
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string join_rows(const std::vector<long>& rows)
{
    std::ostringstream os;
    const std::size_t shown = std::min<std::size_t>(rows.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) os << (i ? ", " : "") << rows[i];
    if (rows.size() > shown) os << ", ... (" << rows.size() << " rows)";
    return os.str();
}

const char* bernoulli_name(BernoulliConvention c)
{
    return c == BernoulliConvention::kurtosis_matched ? "rho(1-rho)=1/(6+tau)" : "rho(1-rho)=1/(6-tau)";
}

json flags_block(BernoulliConvention bernoulli)
{
    return {{"bernoulli_root", bernoulli_name(bernoulli)},
            {"bernoulli_rho", "smaller root (rho <= 1/2)"},
            {"quantile", "order statistic ceil((1-nu)N), 1-based"},
            {"tau_clamp", {kTauClampLow, kTauClampHigh}},
            {"tau_dead_zone", kTauDeadZone},
            {"selection", "K_j > cutoff (strict)"}};
}

json dims_json(const Dimensions& d)
{
    return {{"n", d.n}, {"p", d.p}, {"k", d.k}, {"c_n", d.c_n()}, {"alpha_n", d.alpha_n()}};
}

json tau_json(const KurtosisEstimate& t)
{
    return {{"raw", t.raw_value}, {"clamped", t.tau_hat}, {"was_clamped", t.clamped}};
}

std::string predictor_name(const std::vector<std::string>& names, Index id)
{
    if (id >= 0 && static_cast<std::size_t>(id) < names.size()) return names[static_cast<std::size_t>(id)];
    return "x" + std::to_string(id + 1);
}

}  // namespace

std::vector<std::string> split_record(const std::string& line, char delimiter)
{
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += ch;
            }
        } else if (ch == '"' && trim(cell).empty()) {
            quoted = true;
            was_quoted = true;
            cell.clear();
        } else if (ch == delimiter) {
            out.push_back(was_quoted ? cell : trim(cell));
            cell.clear();
            was_quoted = false;
        } else if (ch != '\r' || i + 1 != line.size()) {
            if (!(was_quoted && std::isspace(static_cast<unsigned char>(ch)))) cell += ch;
        }
    }
    if (quoted) throw ParseError("unterminated quoted field");
    out.push_back(was_quoted ? cell : trim(cell));
    return out;
}

std::vector<Index> resolve_columns(const std::string& selector, const std::vector<std::string>& header)
{
    std::vector<Index> out;
    const auto width = static_cast<long>(header.size());
    auto by_position = [&](long pos, const std::string& token) {
        if (pos < 1 || pos > width)
            throw ParseError("column " + token + " out of range 1.." + std::to_string(width));
        return static_cast<Index>(pos - 1);
    };
    std::stringstream ss(selector);
    std::string token;
    while (std::getline(ss, token, ',')) {
        token = trim(token);
        if (token.empty()) continue;
        if (const auto it = std::find(header.begin(), header.end(), token); it != header.end()) {
            out.push_back(static_cast<Index>(it - header.begin()));
            continue;
        }
        if (const auto pos = parse_position(token)) {
            out.push_back(by_position(*pos, token));
            continue;
        }
        const auto dash = token.find('-');
        if (dash != std::string::npos) {
            auto endpoint = [&](const std::string& t) -> std::optional<long> {
                if (const auto it = std::find(header.begin(), header.end(), t); it != header.end())
                    return static_cast<long>(it - header.begin()) + 1;
                return parse_position(t);
            };
            const auto lo = endpoint(trim(token.substr(0, dash)));
            const auto hi = endpoint(trim(token.substr(dash + 1)));
            if (lo && hi && *lo <= *hi) {
                for (long c = *lo; c <= *hi; ++c) out.push_back(by_position(c, token));
                continue;
            }
        }
        throw ParseError("unknown column '" + token + "'");
    }
    std::set<Index> seen;
    for (Index c : out)
        if (!seen.insert(c).second)
            throw ParseError("column '" + header[static_cast<std::size_t>(c)] + "' selected twice");
    return out;
}

IngestedTable ingest_stream(std::istream& in, const IngestOptions& options)
{
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty input: no header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const char delim = options.delimiter ? options.delimiter
                                         : (line.find('\t') != std::string::npos ? '\t' : ',');
    const std::vector<std::string> header = split_record(line, delim);

    if (trim(options.responses).empty()) throw ParseError("no response columns selected");
    const auto resp_cols = resolve_columns(options.responses, header);
    std::vector<Index> pred_cols;
    if (trim(options.predictors).empty()) {
        for (Index c = 0; c < static_cast<Index>(header.size()); ++c)
            if (std::find(resp_cols.begin(), resp_cols.end(), c) == resp_cols.end()) pred_cols.push_back(c);
    } else {
        pred_cols = resolve_columns(options.predictors, header);
    }
    for (Index c : pred_cols)
        if (std::find(resp_cols.begin(), resp_cols.end(), c) != resp_cols.end())
            throw ParseError("column '" + header[static_cast<std::size_t>(c)] +
                             "' is both a response and a predictor");
    if (resp_cols.empty()) throw ParseError("no response columns selected");

    std::vector<std::vector<double>> rows;
    std::vector<long> missing_rows;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_record(line, delim);
        if (cells.size() != header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, found " +
                             std::to_string(cells.size()));
        std::vector<double> values(cells.size(), std::nan(""));
        bool missing = false;
        auto read = [&](Index c) {
            const std::string& cell = cells[static_cast<std::size_t>(c)];
            if (is_missing(cell)) {
                missing = true;
                return;
            }
            const auto v = parse_number(cell);
            if (!v || !std::isfinite(*v))
                throw ParseError("line " + std::to_string(line_no) + ", column '" +
                                 header[static_cast<std::size_t>(c)] + "': not a number: '" + cell + "'");
            values[static_cast<std::size_t>(c)] = *v;
        };
        for (Index c : resp_cols) read(c);
        for (Index c : pred_cols) read(c);
        if (missing) missing_rows.push_back(line_no - 1);
        rows.push_back(std::move(values));
    }
    if (!missing_rows.empty())
        throw DataError("missing values in data row(s) " + join_rows(missing_rows));
    if (rows.empty()) throw ParseError("no data rows");

    const auto n = static_cast<Index>(rows.size());
    const auto p = static_cast<Index>(resp_cols.size());
    const auto k_data = static_cast<Index>(pred_cols.size());
    const Index k = k_data + (options.intercept ? 1 : 0);
    Eigen::MatrixXd Y(n, p);
    Eigen::MatrixXd X(n, k);
    for (Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        for (Index j = 0; j < p; ++j) Y(i, j) = r[static_cast<std::size_t>(resp_cols[static_cast<std::size_t>(j)])];
        for (Index j = 0; j < k_data; ++j) X(i, j) = r[static_cast<std::size_t>(pred_cols[static_cast<std::size_t>(j)])];
    }
    if (options.intercept) X.col(k_data).setOnes();

    if (options.log_responses) {
        std::vector<long> bad;
        for (Index i = 0; i < n; ++i)
            if ((Y.row(i).array() <= 0.0).any()) bad.push_back(i + 1);
        if (!bad.empty())
            throw DomainError("log transform needs positive responses; non-positive values in data row(s) " +
                              join_rows(bad));
        Y = Y.array().log().matrix();
    }

    std::vector<std::string> resp_names, pred_names;
    for (Index c : resp_cols) resp_names.push_back(header[static_cast<std::size_t>(c)]);
    for (Index c : pred_cols) pred_names.push_back(header[static_cast<std::size_t>(c)]);
    std::vector<Index> keep;
    if (options.intercept) {
        pred_names.emplace_back("(intercept)");
        keep.push_back(k_data);
    }
    return IngestedTable{build_dataset(Y, X), std::move(resp_names), std::move(pred_names), std::move(keep)};
}

IngestedTable ingest_table(const std::string& path, const IngestOptions& options)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    IngestOptions opts = options;
    if (!opts.delimiter && path.size() >= 4 && lower(path.substr(path.size() - 4)) == ".tsv")
        opts.delimiter = '\t';
    return ingest_stream(in, opts);
}

std::vector<RuleSpec> parse_rules(const std::string& text)
{
    std::vector<RuleSpec> rules;
    auto set_param = [&](RuleSpec& rule, const std::string& assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value, got '" + assignment + "'");
        const std::string key = lower(trim(assignment.substr(0, eq)));
        const std::string raw = trim(assignment.substr(eq + 1));
        const auto value = parse_number(raw);
        if (!value) throw ParseError("rule parameter '" + key + "' is not a number: '" + raw + "'");
        if (rule.kind == RuleKind::kbt && key == "nu") {
            if (!(*value >= 0.0 && *value < 1.0)) throw DomainError("nu must lie in [0, 1)");
            rule.nu = *value;
        } else if (rule.kind == RuleKind::kbt && (key == "n" || key == "reps")) {
            if (!(*value >= 1.0) || std::floor(*value) != *value || *value > 1e9)
                throw DomainError("bootstrap N must be a positive integer");
            rule.n_reps = static_cast<int>(*value);
        } else if (rule.kind == RuleKind::fixed_margin && (key == "vartheta" || key == "theta")) {
            if (!(*value > 0.0)) throw DomainError("vartheta must be positive");
            rule.vartheta = *value;
        } else {
            throw ParseError("rule " + to_string(rule.kind) + " has no parameter '" + key + "'");
        }
    };

    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        token = trim(token);
        if (token.empty()) continue;
        const auto colon = token.find(':');
        if (colon == std::string::npos && token.find('=') != std::string::npos) {
            if (rules.empty()) throw ParseError("parameter '" + token + "' before any rule");
            set_param(rules.back(), token);
            continue;
        }
        const std::string name = lower(trim(token.substr(0, colon)));
        RuleSpec rule;
        if (name == "kaic") rule.kind = RuleKind::kaic;
        else if (name == "kbic") rule.kind = RuleKind::kbic;
        else if (name == "kcp") rule.kind = RuleKind::kcp;
        else if (name == "kbt") rule.kind = RuleKind::kbt;
        else if (name == "fixed" || name == "fixedmargin" || name == "fixed_margin") rule.kind = RuleKind::fixed_margin;
        else throw ParseError("unknown rule '" + name + "'");
        if (colon != std::string::npos) set_param(rule, token.substr(colon + 1));
        if (rule.kind == RuleKind::fixed_margin && !(rule.vartheta > 0.0))
            throw DomainError("fixed margin rule needs vartheta > 0");
        rules.push_back(rule);
    }
    for (const auto& r : rules)
        if (r.kind == RuleKind::fixed_margin && !(r.vartheta > 0.0))
            throw DomainError("fixed margin rule needs vartheta > 0");
    if (rules.empty()) throw ParseError("no rules given");
    return rules;
}

OutputFormat parse_format(const std::string& text)
{
    const std::string t = lower(trim(text));
    if (t == "json") return OutputFormat::json;
    if (t == "tsv") return OutputFormat::tsv;
    throw ParseError("unknown output format '" + text + "' (json or tsv)");
}

std::string format_double(double value)
{
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

json selection_report_json(const SelectionReport& report, const SelectionContext& ctx)
{
    json j;
    j["dims"] = dims_json(report.dims);
    j["dims"]["k_candidates"] = report.ranked.size();
    j["input"] = ctx.input;
    j["log_responses"] = ctx.log_responses;
    j["intercept"] = ctx.intercept;
    j["seed"] = ctx.seed;
    j["always_keep"] = json::array();
    for (Index id : report.always_keep)
        j["always_keep"].push_back({{"id", id + 1}, {"name", predictor_name(ctx.predictor_names, id)}});
    j["tau_hat"] = ctx.tau ? tau_json(*ctx.tau) : json(nullptr);
    j["sampler"] = ctx.sampler ? json(ctx.sampler->to_string()) : json(nullptr);

    j["rules"] = json::array();
    for (const auto& o : report.outcomes) {
        json r{{"rule", to_string(o.rule.kind)}, {"label", o.label}, {"cutoff", o.cutoff}};
        if (o.rule.threshold) {
            r["nu"] = o.rule.threshold->nu;
            r["n_reps"] = o.rule.threshold->n_reps;
            r["bootstrap_seed"] = o.rule.threshold->seed;
            r["sampler"] = o.rule.threshold->sampler.to_string();
        }
        if (o.rule.kind == RuleKind::fixed_margin) r["vartheta"] = o.rule.vartheta;
        r["selected"] = json::array();
        for (Index id : o.selected) r["selected"].push_back(id + 1);
        j["rules"].push_back(std::move(r));
    }
    j["ranking"] = json::array();
    for (std::size_t i = 0; i < report.ranked.size(); ++i) {
        const auto& e = report.ranked[i];
        j["ranking"].push_back({{"rank", i + 1},
                                {"id", e.id + 1},
                                {"name", predictor_name(ctx.predictor_names, e.id)},
                                {"K", e.kappa},
                                {"A", std::log1p(e.kappa)},
                                {"C", static_cast<double>(report.dims.p) + e.kappa}});
    }
    j["flags"] = flags_block(ctx.bernoulli);
    return j;
}

std::string selection_report_tsv(const SelectionReport& report, const SelectionContext& ctx)
{
    std::ostringstream os;
    os << "rank\tid\tname\tK";
    for (const auto& o : report.outcomes) os << '\t' << o.label;
    os << '\n';
    for (std::size_t i = 0; i < report.ranked.size(); ++i) {
        const auto& e = report.ranked[i];
        os << i + 1 << '\t' << e.id + 1 << '\t' << predictor_name(ctx.predictor_names, e.id) << '\t'
           << format_double(e.kappa);
        for (const auto& o : report.outcomes)
            os << '\t' << (std::find(o.selected.begin(), o.selected.end(), e.id) != o.selected.end());
        os << '\n';
    }
    return os.str();
}

json threshold_json(const ThresholdEstimate& estimate, const Dimensions& dims,
                    const std::optional<KurtosisEstimate>& tau, BernoulliConvention bernoulli)
{
    return {{"dims", dims_json(dims)},
            {"threshold", estimate.value},
            {"nu", estimate.nu},
            {"n_reps", estimate.n_reps},
            {"seed", estimate.seed},
            {"sampler", estimate.sampler.to_string()},
            {"tau_hat", tau ? tau_json(*tau) : json(nullptr)},
            {"flags", flags_block(bernoulli)}};
}

std::string threshold_tsv(const ThresholdEstimate& estimate, const Dimensions& dims,
                          const std::optional<KurtosisEstimate>& tau)
{
    std::ostringstream os;
    os << "n\tp\tk\tnu\tN\tseed\tsampler\ttau_raw\ttau_hat\tthreshold\n";
    os << dims.n << '\t' << dims.p << '\t' << dims.k << '\t' << format_double(estimate.nu) << '\t'
       << estimate.n_reps << '\t' << estimate.seed << '\t' << estimate.sampler.to_string() << '\t'
       << (tau ? format_double(tau->raw_value) : "") << '\t' << (tau ? format_double(tau->tau_hat) : "")
       << '\t' << format_double(estimate.value) << '\n';
    return os.str();
}

void check_tally_conservation(const SimResult& result)
{
    for (const auto& t : result.tallies)
        if (t.total() != result.completed)
            throw DomainError("tally for " + t.label + " sums to " + std::to_string(t.total()) +
                              ", expected " + std::to_string(result.completed));
    if (result.completed + result.failures != result.scenario.reps)
        throw DomainError("completed plus failed replicates differ from reps");
}

json sim_tally_json(const SimResult& result)
{
    check_tally_conservation(result);
    const auto& s = result.scenario;
    json j;
    j["scenario"] = {{"setting", to_string(s.setting)},
                     {"n", s.n},
                     {"p", s.p()},
                     {"k", s.k()},
                     {"c", s.c},
                     {"alpha", s.alpha},
                     {"k_star", s.k_star},
                     {"error_law", s.error_law.to_string()},
                     {"reps", s.reps},
                     {"boot_reps", s.boot_reps},
                     {"sampler_policy", s.sampler_policy == SamplerPolicy::matched ? "matched" : "fixed"},
                     {"fixed_sampler", s.fixed_sampler.to_string()},
                     {"fixed_design", s.fixed_design},
                     {"seed", s.seed}};
    j["completed"] = result.completed;
    j["failures"] = result.failures;
    j["failure_messages"] = result.failure_messages;
    j["mean_tau_hat"] = result.mean_tau_hat;
    j["paired_rules"] = true;
    j["tallies"] = json::array();
    for (const auto& t : result.tallies) {
        const auto as = t.avg_spurious();
        j["tallies"].push_back({{"rule", t.label},
                                {"U-S", t.under},
                                {"T-S", t.exact},
                                {"O-S", t.over},
                                {"A-S", as ? json(*as) : json(nullptr)},
                                {"sum", t.total()}});
    }
    j["flags"] = flags_block(s.bernoulli);
    return j;
}

std::string sim_tally_tsv(const SimResult& result)
{
    check_tally_conservation(result);
    std::ostringstream os;
    os << "metric";
    for (const auto& t : result.tallies) os << '\t' << t.label;
    os << '\n';
    auto row = [&](const char* name, auto value) {
        os << name;
        for (const auto& t : result.tallies) os << '\t' << value(t);
        os << '\n';
    };
    row("U-S", [](const SimTally& t) { return std::to_string(t.under); });
    row("T-S", [](const SimTally& t) { return std::to_string(t.exact); });
    row("O-S", [](const SimTally& t) { return std::to_string(t.over); });
    row("A-S", [](const SimTally& t) {
        const auto as = t.avg_spurious();
        return as ? format_double(*as) : std::string();
    });
    row("Sum", [](const SimTally& t) { return std::to_string(t.total()); });
    return os.str();
}

json verification_json(const VerificationReport& report)
{
    json j;
    j["all_pass"] = report.all_pass();
    j["records"] = json::array();
    for (const auto& r : report.records)
        j["records"].push_back({{"check", r.check},
                                {"params", r.params},
                                {"observed", r.observed},
                                {"target", r.target},
                                {"tolerance", r.tolerance},
                                {"pass", r.pass},
                                {"informational", r.informational},
                                {"samples", r.samples},
                                {"note", r.note}});
    return j;
}

std::string verification_tsv(const VerificationReport& report)
{
    std::ostringstream os;
    os << "check\tobserved\ttarget\ttolerance\tpass\tinformational\tsamples\tparams\tnote\n";
    for (const auto& r : report.records) {
        std::ostringstream params;
        bool first = true;
        for (const auto& [key, value] : r.params) {
            params << (first ? "" : ";") << key << '=' << format_double(value);
            first = false;
        }
        os << r.check << '\t' << format_double(r.observed) << '\t' << format_double(r.target) << '\t'
           << format_double(r.tolerance) << '\t' << r.pass << '\t' << r.informational << '\t'
           << r.samples << '\t' << params.str() << '\t' << r.note << '\n';
    }
    return os.str();
}

json figure1_json(const Figure1Result& result)
{
    json j;
    j["design"] = to_string(result.design);
    j["dims"] = dims_json(result.dims);
    j["limit"] = result.limit;
    j["laws"] = json::array();
    for (const auto& s : result.summaries)
        j["laws"].push_back({{"law", s.law},
                             {"excess_kurtosis", std::isfinite(s.excess_kurtosis) ? json(s.excess_kurtosis)
                                                                                  : json(nullptr)},
                             {"measured_excess_kurtosis", s.measured_excess_kurtosis},
                             {"q1", s.q1},
                             {"median", s.median},
                             {"q3", s.q3},
                             {"mean", s.mean},
                             {"count", s.count}});
    return j;
}

std::string figure1_tsv(const Figure1Result& result)
{
    std::ostringstream os;
    os << "design\tlaw\texcess_kurtosis\tmeasured_excess_kurtosis\tq1\tmedian\tq3\tmean\tcount\tlimit\n";
    for (const auto& s : result.summaries)
        os << to_string(result.design) << '\t' << s.law << '\t' << format_double(s.excess_kurtosis) << '\t'
           << format_double(s.measured_excess_kurtosis) << '\t' << format_double(s.q1) << '\t' << format_double(s.median) << '\t' << format_double(s.q3)
           << '\t' << format_double(s.mean) << '\t' << s.count << '\t' << format_double(result.limit)
           << '\n';
    return os.str();
}

void write_output(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        if (!std::cout) throw IoError("write to stdout failed");
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    out.close();
    if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace koo
