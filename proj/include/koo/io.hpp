#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "koo/bootstrap.hpp"
#include "koo/kurtosis.hpp"
#include "koo/linmodel.hpp"
#include "koo/selector.hpp"
#include "koo/simlab.hpp"

namespace koo {

struct IngestOptions {
    /// Column selectors: comma lists of header names, 1-based positions and
    /// ranges such as "3-7" or "y1-y6". Empty predictors means every other column.
    std::string responses;
    std::string predictors;
    bool log_responses = false;
    bool intercept = false;
    /// ',' or '\t'; 0 picks tab when the header line contains one.
    char delimiter = 0;
};

struct IngestedTable {
    RegressionDataset<double> data;
    std::vector<std::string> response_names;
    std::vector<std::string> predictor_names;  // includes "(intercept)" when added
    std::vector<Index> always_keep;             // 0-based predictor columns
};

/// Reads a delimited table with one header row into (Y, X).
/// ParseError: non-numeric cell, ragged row, bad selector.
/// DataError: missing values (all offending rows are listed).
/// DomainError: log transform of a non-positive response.
IngestedTable ingest_table(const std::string& path, const IngestOptions& options);
IngestedTable ingest_stream(std::istream& in, const IngestOptions& options);

/// Splits one RFC-4180 record. Quoted fields may contain the delimiter and
/// doubled quotes; embedded newlines are not supported.
std::vector<std::string> split_record(const std::string& line, char delimiter);

/// Resolves a selector against the header into 0-based column positions.
std::vector<Index> resolve_columns(const std::string& selector,
                                   const std::vector<std::string>& header);

/// One rule as written on the command line.
struct RuleSpec {
    RuleKind kind = RuleKind::kaic;
    double nu = 0.05;
    int n_reps = 1000;
    double vartheta = 0.0;
};

/// "kaic,kbic,kcp,kbt:nu=0.05,n=1000,fixed:vartheta=0.5". A token with ':'
/// opens a rule with its first parameter; bare key=value tokens add
/// parameters to the rule before them.
std::vector<RuleSpec> parse_rules(const std::string& text);

enum class OutputFormat { json, tsv };

OutputFormat parse_format(const std::string& text);

/// Provenance carried next to a selection report.
struct SelectionContext {
    std::vector<std::string> predictor_names;
    std::optional<KurtosisEstimate> tau;
    std::optional<ErrorDistSpec> sampler;
    std::uint64_t seed = 0;
    BernoulliConvention bernoulli = BernoulliConvention::kurtosis_matched;
    bool log_responses = false;
    bool intercept = false;
    std::string input;
};

nlohmann::json selection_report_json(const SelectionReport& report, const SelectionContext& ctx);
/// rank, id, name, K_j and one 0/1 column per rule.
std::string selection_report_tsv(const SelectionReport& report, const SelectionContext& ctx);

nlohmann::json threshold_json(const ThresholdEstimate& estimate, const Dimensions& dims,
                              const std::optional<KurtosisEstimate>& tau,
                              BernoulliConvention bernoulli);
std::string threshold_tsv(const ThresholdEstimate& estimate, const Dimensions& dims,
                          const std::optional<KurtosisEstimate>& tau);

/// Throws DomainError when the counters of a rule do not add up to the
/// completed replicates.
void check_tally_conservation(const SimResult& result);

nlohmann::json sim_tally_json(const SimResult& result);
/// Rows U-S, T-S, O-S, A-S and Sum; one column per rule; A-S blank when O-S = 0.
std::string sim_tally_tsv(const SimResult& result);

nlohmann::json verification_json(const VerificationReport& report);
std::string verification_tsv(const VerificationReport& report);

nlohmann::json figure1_json(const Figure1Result& result);
std::string figure1_tsv(const Figure1Result& result);

/// 17 significant digits, so the value reads back exactly.
std::string format_double(double value);

/// Writes `text` to `path`, or to stdout when path is empty or "-".
void write_output(const std::string& path, const std::string& text);

}  // namespace koo
