#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "semigraph/harness.hpp"

namespace semigraph {

class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Trace CSV columns, in order. user/arm/optimal_arm are 1-indexed; psi_num and
// psi_den are empty for policies without an exploration Gram matrix.
inline constexpr std::string_view kTraceHeader =
    "t,user,arm,optimal_arm,reward,regret,cum_regret,psi_num,psi_den,policy,replication";

inline constexpr std::string_view kSummaryHeader =
    "policy,checkpoint_t,mean_cum_regret,stderr,normalized_mean,band_low,band_high";

inline constexpr std::string_view kFinalHeader = "policy,normalized,final_mean,half_width,band_low,band_high";

inline constexpr std::string_view kPairwiseHeader = "policy_a,policy_b,percent_difference";

// Shortest decimal form that parses back to the same double.
std::string format_double(double x);
double parse_double(std::string_view s);

// RFC-4180 field quoting.
std::string csv_field(std::string_view s);
std::vector<std::string> split_csv_line(std::string_view line);

void write_trace_csv(std::ostream& out, const Trace& trace);
void write_trace_csv(const Trace& trace, const std::filesystem::path& path);
// Reads the columns stored in the CSV; in-memory-only fields stay default.
std::vector<Trace> read_trace_csv(std::istream& in);
std::vector<Trace> read_trace_csv(const std::filesystem::path& path);

struct NormalizedSummary {
    Summary summary;                          // per-replication ratios
    std::vector<std::size_t> dropped;         // checkpoints where random regret was 0
};

// Divides each replication's cumulative regret by the random policy's at the
// same replication and checkpoint. Checkpoints where any random value is 0 are
// dropped with a warning on stderr.
NormalizedSummary relative_to_random(const Summary& summary, const Summary& random_summary);

// Writes one row per (policy, checkpoint). normalized_mean is empty when no
// normalized summary is given for that policy. The band is mean +- 1.96 stderr
// of the raw cumulative regret.
void write_summary_csv(std::ostream& out, const std::vector<Summary>& summaries,
                       const std::vector<std::optional<Summary>>& normalized);

struct FinalRow {
    std::string policy;
    bool normalized = false;
    double mean = 0.0;
    double half_width = 0.0;
};

struct PairwiseRow {
    std::string policy_a;
    std::string policy_b;
    double percent = 0.0;  // 100 (a - b) / b
};

struct FinalTable {
    std::vector<FinalRow> rows;
    std::vector<PairwiseRow> pairwise;
};

FinalTable summarize_final(const std::vector<Summary>& summaries, bool normalized);
void write_final_csv(std::ostream& out, const FinalTable& table);
void write_pairwise_csv(std::ostream& out, const FinalTable& table);

}  // namespace semigraph
