#include "semigraph/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <istream>
#include <limits>
#include <ostream>

namespace semigraph {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ReportError("not a number: '" + std::string(s) + "'");
    }
    return x;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    if (quoted) throw ReportError("unterminated quoted field");
    fields.push_back(std::move(cur));
    return fields;
}

namespace {

std::string optional_field(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

std::size_t parse_index(const std::string& s) {
    std::size_t x = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ReportError("not an integer: '" + s + "'");
    return x;
}

}  // namespace

void write_trace_csv(std::ostream& out, const Trace& trace) {
    out << kTraceHeader << '\n';
    const std::string policy = csv_field(trace.policy);
    for (const auto& r : trace.rounds) {
        out << r.t << ',' << r.user + 1 << ',' << r.arm + 1 << ',' << r.optimal_arm + 1 << ','
            << format_double(r.reward) << ',' << format_double(r.regret) << ',' << format_double(r.cum_regret) << ','
            << optional_field(r.psi_num) << ',' << optional_field(r.psi_den) << ',' << policy << ','
            << trace.replication << '\n';
    }
}

void write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ReportError("cannot open " + path.string() + " for writing");
    write_trace_csv(out, trace);
    out.flush();
    if (!out) throw ReportError("write failed: " + path.string());
}

std::vector<Trace> read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ReportError("empty trace file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTraceHeader) throw ReportError("unexpected trace header: " + line);
    std::vector<Trace> traces;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 11) {
            throw ReportError("trace line " + std::to_string(lineno) + ": expected 11 fields, got " +
                              std::to_string(f.size()));
        }
        try {
            const std::size_t rep = parse_index(f[10]);
            if (traces.empty() || traces.back().policy != f[9] || traces.back().replication != rep) {
                traces.push_back(Trace{f[9], rep, {}});
            }
            RoundRecord r;
            r.t = parse_index(f[0]);
            r.user = parse_index(f[1]) - 1;
            r.arm = parse_index(f[2]) - 1;
            r.optimal_arm = parse_index(f[3]) - 1;
            r.reward = parse_double(f[4]);
            r.regret = parse_double(f[5]);
            r.cum_regret = parse_double(f[6]);
            if (!f[7].empty()) r.psi_num = parse_double(f[7]);
            if (!f[8].empty()) r.psi_den = parse_double(f[8]);
            traces.back().rounds.push_back(r);
        } catch (const ReportError& e) {
            throw ReportError("trace line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return traces;
}

std::vector<Trace> read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ReportError("cannot open " + path.string());
    return read_trace_csv(in);
}

NormalizedSummary relative_to_random(const Summary& summary, const Summary& random_summary) {
    if (summary.checkpoints != random_summary.checkpoints) throw ReportError("checkpoints do not match");
    if (summary.replications() != random_summary.replications()) throw ReportError("replication counts do not match");
    NormalizedSummary out;
    out.summary.policy = summary.policy;
    out.summary.values.resize(summary.replications());
    for (std::size_t c = 0; c < summary.checkpoints.size(); ++c) {
        bool zero = false;
        for (const auto& row : random_summary.values) zero = zero || row[c] == 0.0;
        if (zero) {
            std::cerr << "warning: random policy has zero regret at t=" << summary.checkpoints[c]
                      << "; checkpoint dropped from normalization\n";
            out.dropped.push_back(summary.checkpoints[c]);
            continue;
        }
        out.summary.checkpoints.push_back(summary.checkpoints[c]);
        for (std::size_t r = 0; r < summary.replications(); ++r) {
            out.summary.values[r].push_back(summary.values[r][c] / random_summary.values[r][c]);
        }
    }
    return out;
}

void write_summary_csv(std::ostream& out, const std::vector<Summary>& summaries,
                       const std::vector<std::optional<Summary>>& normalized) {
    out << kSummaryHeader << '\n';
    for (std::size_t p = 0; p < summaries.size(); ++p) {
        const Summary& s = summaries[p];
        const Summary* norm = p < normalized.size() && normalized[p] ? &*normalized[p] : nullptr;
        std::size_t nc = 0;
        for (std::size_t c = 0; c < s.checkpoints.size(); ++c) {
            const double mean = s.mean(c);
            const double half = s.half_width(c);
            std::string norm_field;
            if (norm) {
                while (nc < norm->checkpoints.size() && norm->checkpoints[nc] < s.checkpoints[c]) ++nc;
                if (nc < norm->checkpoints.size() && norm->checkpoints[nc] == s.checkpoints[c]) {
                    norm_field = format_double(norm->mean(nc));
                }
            }
            out << csv_field(s.policy) << ',' << s.checkpoints[c] << ',' << format_double(mean) << ','
                << format_double(s.stderr_(c)) << ',' << norm_field << ',' << format_double(mean - half) << ','
                << format_double(mean + half) << '\n';
        }
    }
}

FinalTable summarize_final(const std::vector<Summary>& summaries, bool normalized) {
    if (summaries.empty()) throw ReportError("summarize_final needs at least one policy");
    FinalTable table;
    for (const auto& s : summaries) {
        if (s.checkpoints.empty()) throw ReportError("policy " + s.policy + " has no checkpoints");
        const std::size_t last = s.checkpoints.size() - 1;
        table.rows.push_back(FinalRow{s.policy, normalized, s.mean(last), s.half_width(last)});
    }
    for (const auto& a : table.rows) {
        for (const auto& b : table.rows) {
            if (a.policy == b.policy) continue;
            const double pct = b.mean == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                             : 100.0 * (a.mean - b.mean) / b.mean;
            table.pairwise.push_back(PairwiseRow{a.policy, b.policy, pct});
        }
    }
    return table;
}

void write_final_csv(std::ostream& out, const FinalTable& table) {
    out << kFinalHeader << '\n';
    for (const auto& r : table.rows) {
        out << csv_field(r.policy) << ',' << (r.normalized ? "true" : "false") << ',' << format_double(r.mean) << ','
            << format_double(r.half_width) << ',' << format_double(r.mean - r.half_width) << ','
            << format_double(r.mean + r.half_width) << '\n';
    }
}

void write_pairwise_csv(std::ostream& out, const FinalTable& table) {
    out << kPairwiseHeader << '\n';
    for (const auto& r : table.pairwise) {
        out << csv_field(r.policy_a) << ',' << csv_field(r.policy_b) << ',' << format_double(r.percent) << '\n';
    }
}

}  // namespace semigraph
