#pragma once

#include "enn/error.hpp"
#include "enn/selection.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace enn {

/// Relative margin by which the transfer arm's test MSE must exceed the
/// scratch arm's before a level is flagged as negative transfer.
inline constexpr double negative_transfer_margin = 0.05;

struct ArmOutcome {
    double train_mse = 0.0;
    double test_mse = 0.0;
    GridPoint chosen;
    int iterations = 0;
    Termination termination = Termination::max_epochs;
};

struct ReplicateRow {
    int replicate = 0;
    double tau = 0.5;
    ArmOutcome scratch;
    std::optional<ArmOutcome> transfer;

    [[nodiscard]] bool negative_transfer() const noexcept
    {
        return transfer && transfer->test_mse > (1.0 + negative_transfer_margin) * scratch.test_mse;
    }
};

struct TauSummary {
    double tau = 0.5;
    double scratch_train = 0.0;
    double scratch_test = 0.0;
    double transfer_train = 0.0;
    double transfer_test = 0.0;
    int replicates = 0;
    int transfer_wins = 0;
    int negative_flags = 0;

    [[nodiscard]] bool negative_transfer() const noexcept
    {
        return transfer_test > (1.0 + negative_transfer_margin) * scratch_test;
    }
};

struct ExperimentReport {
    std::vector<double> tau_levels;
    bool has_transfer = false;
    /// Ordered by replicate, then by tau level.
    std::vector<ReplicateRow> rows;

    /// Arithmetic means over replicates, one entry per tau level.
    [[nodiscard]] std::vector<TauSummary> summary() const
    {
        std::vector<TauSummary> out;
        for (double tau : tau_levels) {
            TauSummary s;
            s.tau = tau;
            for (const auto& r : rows) {
                if (r.tau != tau) continue;
                ++s.replicates;
                s.scratch_train += r.scratch.train_mse;
                s.scratch_test += r.scratch.test_mse;
                if (r.transfer) {
                    s.transfer_train += r.transfer->train_mse;
                    s.transfer_test += r.transfer->test_mse;
                    if (r.transfer->test_mse < r.scratch.test_mse) ++s.transfer_wins;
                    if (r.negative_transfer()) ++s.negative_flags;
                }
            }
            if (s.replicates > 0) {
                const auto k = static_cast<double>(s.replicates);
                s.scratch_train /= k;
                s.scratch_test /= k;
                s.transfer_train /= k;
                s.transfer_test /= k;
            }
            out.push_back(s);
        }
        return out;
    }

    [[nodiscard]] int replicate_count() const
    {
        int m = -1;
        for (const auto& r : rows) m = std::max(m, r.replicate);
        return m + 1;
    }

    /// Number of replicates with a negative-transfer flag at one or more levels.
    [[nodiscard]] int replicates_with_negative_transfer() const
    {
        int count = 0;
        for (int rep = 0; rep < replicate_count(); ++rep) {
            for (const auto& r : rows) {
                if (r.replicate == rep && r.negative_transfer()) {
                    ++count;
                    break;
                }
            }
        }
        return count;
    }
};

/// Six significant digits, '.' decimal separator.
[[nodiscard]] inline std::string format_g6(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

/// Main table: one row per tau, columns ENN.TF train/test then ENN
/// train/test. Without a transfer arm only the ENN columns appear.
[[nodiscard]] inline std::string table_tsv(const ExperimentReport& report)
{
    std::ostringstream out;
    out << "tau";
    if (report.has_transfer) out << "\tENN.TF_train\tENN.TF_test";
    out << "\tENN_train\tENN_test\n";
    for (const auto& s : report.summary()) {
        out << format_g6(s.tau);
        if (report.has_transfer) {
            out << '\t' << format_g6(s.transfer_train) << '\t' << format_g6(s.transfer_test);
        }
        out << '\t' << format_g6(s.scratch_train) << '\t' << format_g6(s.scratch_test) << '\n';
    }
    return out.str();
}

/// Long format: one row per (replicate, tau, arm).
[[nodiscard]] inline std::string replicates_tsv(const ExperimentReport& report)
{
    std::ostringstream out;
    out << "replicate\ttau\tarm\ttrain_mse\ttest_mse\tlambda\thidden\titerations\ttermination"
           "\tnegative_transfer\n";
    auto line = [&](const ReplicateRow& r, const char* arm, const ArmOutcome& a) {
        out << r.replicate << '\t' << format_g6(r.tau) << '\t' << arm << '\t'
            << format_g6(a.train_mse) << '\t' << format_g6(a.test_mse) << '\t'
            << format_g6(a.chosen.lambda) << '\t' << a.chosen.hidden << '\t' << a.iterations << '\t'
            << to_string(a.termination) << '\t' << (r.negative_transfer() ? 1 : 0) << '\n';
    };
    for (const auto& r : report.rows) {
        if (r.transfer) line(r, "ENN.TF", *r.transfer);
        line(r, "ENN", r.scratch);
    }
    return out.str();
}

/// Per-tau negative-transfer flags on the aggregate and per-replicate counts.
[[nodiscard]] inline std::string negative_transfer_tsv(const ExperimentReport& report)
{
    std::ostringstream out;
    out << "tau\tnegative_transfer\tflagged_replicates\treplicates\ttransfer_wins\n";
    for (const auto& s : report.summary()) {
        out << format_g6(s.tau) << '\t' << (s.negative_transfer() ? 1 : 0) << '\t'
            << s.negative_flags << '\t' << s.replicates << '\t' << s.transfer_wins << '\n';
    }
    return out.str();
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCategory::io, "cannot write " + path);
    }
    out << text;
}

} // namespace enn
