#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rulgp/common.hpp"

namespace rulgp {

/// Column layout of the turbofan data files: engine id, cycle, then
/// 3 operational settings and 21 sensor readings.
constexpr int kFeatureCount = 24;

enum class SetKind { training, testing };

struct SensorRow {
    int engine_id = 0;
    int cycle = 0;
    Eigen::VectorXd features;  // kFeatureCount entries
};

struct EngineTrajectory {
    int id = 0;
    std::vector<SensorRow> rows;    // cycles 1..rows.size(), consecutive
    std::vector<double> rul;        // per-cycle labels; empty until attached
    std::optional<double> final_rul;  // RUL at the last available cycle

    int last_cycle() const { return rows.empty() ? 0 : rows.back().cycle; }
};

struct TrajectorySet {
    SetKind kind = SetKind::training;
    std::vector<EngineTrajectory> engines;

    bool labeled() const {
        return !engines.empty() &&
               std::all_of(engines.begin(), engines.end(),
                           [](const EngineTrajectory& e) { return e.final_rul.has_value(); });
    }

    const EngineTrajectory* find(int id) const {
        for (const auto& e : engines)
            if (e.id == id) return &e;
        return nullptr;
    }

    std::size_t total_rows() const {
        std::size_t n = 0;
        for (const auto& e : engines) n += e.rows.size();
        return n;
    }
};

/// Per-column standardization statistics fitted on training data.
/// Zero-variance columns store std = 1 so they normalize to constant 0.
struct NormStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
};

namespace detail {

inline bool parse_double(const std::string& tok, double& out) {
    const char* s = tok.c_str();
    char* end = nullptr;
    out = std::strtod(s, &end);
    return end != s && *end == '\0' && std::isfinite(out);
}

inline bool is_blank(const std::string& line) {
    return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace detail

/// Parses whitespace-separated text with 26 numeric columns per line into a
/// trajectory set. Rows are grouped by engine id in file order; each engine's
/// cycles must be the consecutive integers 1, 2, ... An engine id appearing
/// in two separate blocks is rejected.
inline TrajectorySet parse_trajectories(std::istream& in, SetKind kind) {
    TrajectorySet ts;
    ts.kind = kind;

    std::set<int> closed_ids;
    EngineTrajectory* current = nullptr;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::is_blank(line)) continue;

        std::istringstream ls(line);
        std::vector<double> vals;
        vals.reserve(kFeatureCount + 2);
        std::string tok;
        while (ls >> tok) {
            double v;
            if (!detail::parse_double(tok, v))
                throw ParseError("line " + std::to_string(line_no) + ": non-numeric token '" + tok + "'");
            vals.push_back(v);
        }
        if (vals.size() != kFeatureCount + 2)
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(kFeatureCount + 2) + " columns, got " +
                             std::to_string(vals.size()));

        const int engine_id = static_cast<int>(vals[0]);
        const int cycle = static_cast<int>(vals[1]);
        if (engine_id < 1 || vals[0] != engine_id)
            throw ParseError("line " + std::to_string(line_no) + ": bad engine id");
        if (cycle < 1 || vals[1] != cycle)
            throw ParseError("line " + std::to_string(line_no) + ": bad cycle number");

        if (current == nullptr || current->id != engine_id) {
            if (closed_ids.count(engine_id))
                throw DataError("engine " + std::to_string(engine_id) +
                                ": rows appear in more than one block");
            if (current != nullptr) closed_ids.insert(current->id);
            ts.engines.push_back(EngineTrajectory{engine_id, {}, {}, std::nullopt});
            current = &ts.engines.back();
        }

        const int expected = current->last_cycle() + 1;
        if (cycle != expected)
            throw DataError("engine " + std::to_string(engine_id) + ": expected cycle " +
                            std::to_string(expected) + ", got " + std::to_string(cycle) +
                            " (line " + std::to_string(line_no) + ")");

        SensorRow row;
        row.engine_id = engine_id;
        row.cycle = cycle;
        row.features = Eigen::Map<const Eigen::VectorXd>(vals.data() + 2, kFeatureCount);
        current->rows.push_back(std::move(row));
    }
    return ts;
}

inline TrajectorySet parse_trajectories_file(const std::string& path, SetKind kind) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open data file: " + path);
    return parse_trajectories(in, kind);
}

/// Writes a trajectory set back out in the same 26-column text format.
/// Features are printed with `decimals` fixed digits; the round trip is exact
/// when values are multiples of 10^-decimals.
inline void write_trajectories(std::ostream& out, const TrajectorySet& ts, int decimals = 4) {
    char buf[64];
    for (const auto& e : ts.engines) {
        for (const auto& row : e.rows) {
            out << row.engine_id << ' ' << row.cycle;
            for (int j = 0; j < row.features.size(); ++j) {
                std::snprintf(buf, sizeof(buf), " %.*f", decimals, row.features[j]);
                out << buf;
            }
            out << '\n';
        }
    }
}

/// Labels a run-to-failure training set: the last observed cycle is the
/// failure time t_f, and RUL at cycle t is t_f - t (0 at failure). The
/// optional cap turns the target into min(t_f - t, cap); it is off by
/// default, matching the linear ground truth of the source data.
inline TrajectorySet attach_training_labels(TrajectorySet ts,
                                            std::optional<double> cap = std::nullopt) {
    if (ts.kind != SetKind::training)
        throw DataError("attach_training_labels: set is not a training set");
    for (auto& e : ts.engines) {
        const int t_f = e.last_cycle();
        e.rul.resize(e.rows.size());
        for (std::size_t i = 0; i < e.rows.size(); ++i) {
            double r = static_cast<double>(t_f - e.rows[i].cycle);
            if (cap) r = std::min(r, *cap);
            e.rul[i] = r;
        }
        e.final_rul = 0.0;
    }
    return ts;
}

/// Labels a testing set from an external RUL file: one non-negative value per
/// engine, i-th line belonging to the i-th engine in file order.
inline TrajectorySet attach_testing_labels(TrajectorySet ts, std::istream& rul_file) {
    if (ts.kind != SetKind::testing)
        throw DataError("attach_testing_labels: set is not a testing set");
    std::vector<double> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(rul_file, line)) {
        ++line_no;
        if (detail::is_blank(line)) continue;
        double v;
        std::string tok = line;
        // trim
        tok.erase(0, tok.find_first_not_of(" \t\r\n"));
        tok.erase(tok.find_last_not_of(" \t\r\n") + 1);
        if (!detail::parse_double(tok, v) || v < 0)
            throw ParseError("RUL file line " + std::to_string(line_no) + ": bad value '" + tok + "'");
        labels.push_back(v);
    }
    if (labels.size() != ts.engines.size())
        throw DataError("RUL file has " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(ts.engines.size()) + " engines");
    for (std::size_t i = 0; i < ts.engines.size(); ++i) ts.engines[i].final_rul = labels[i];
    return ts;
}

inline TrajectorySet attach_testing_labels_file(TrajectorySet ts, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open RUL file: " + path);
    return attach_testing_labels(std::move(ts), in);
}

/// Engines whose id falls in [id_lo, id_hi], preserving order and labels.
inline TrajectorySet filter_engines(const TrajectorySet& ts, int id_lo, int id_hi) {
    TrajectorySet out;
    out.kind = ts.kind;
    for (const auto& e : ts.engines)
        if (e.id >= id_lo && e.id <= id_hi) out.engines.push_back(e);
    return out;
}

/// Truncates every testing trajectory at the given cycle. Labels move back
/// with the truncation: the RUL at the new last cycle is the old label plus
/// the number of cycles dropped. Engines already shorter are untouched.
inline TrajectorySet truncate_testing_at(TrajectorySet ts, int cycle) {
    if (ts.kind != SetKind::testing)
        throw DataError("truncate_testing_at: expected a testing set");
    if (cycle < 1) throw InputError("truncate_testing_at: cycle must be >= 1");
    for (auto& e : ts.engines) {
        const int old_tc = e.last_cycle();
        if (old_tc <= cycle) continue;
        e.rows.resize(cycle);
        if (e.final_rul) e.final_rul = *e.final_rul + (old_tc - cycle);
    }
    return ts;
}

/// Stacks every row of the set into an (total_rows x 24) matrix, engines in
/// set order, cycles ascending.
inline Eigen::MatrixXd stack_features(const TrajectorySet& ts) {
    Eigen::MatrixXd X(ts.total_rows(), kFeatureCount);
    Eigen::Index r = 0;
    for (const auto& e : ts.engines)
        for (const auto& row : e.rows) X.row(r++) = row.features.transpose();
    return X;
}

/// Fits per-column mean/std over all rows of a training set. Population
/// standard deviation; zero-variance columns store std = 1.
inline NormStats fit_norm_stats(const TrajectorySet& ts) {
    if (ts.kind != SetKind::training)
        throw DataError("fit_norm_stats: statistics are fitted on training data only");
    if (ts.total_rows() == 0) throw InputError("fit_norm_stats: empty set");

    const Eigen::MatrixXd X = stack_features(ts);
    NormStats stats;
    stats.mean = X.colwise().mean();
    Eigen::MatrixXd centered = X.rowwise() - stats.mean.transpose();
    stats.std = (centered.array().square().colwise().mean()).sqrt();
    for (Eigen::Index j = 0; j < stats.std.size(); ++j)
        if (stats.std[j] <= 1e-12 * std::max(1.0, std::abs(stats.mean[j]))) stats.std[j] = 1.0;
    return stats;
}

inline Eigen::VectorXd apply_norm_row(const Eigen::VectorXd& features, const NormStats& stats) {
    if (features.size() != stats.mean.size())
        throw InputError("apply_norm: feature dimension mismatch");
    return (features - stats.mean).cwiseQuotient(stats.std);
}

/// Applies training statistics to a set (training or testing). Pure: the
/// input set and the statistics are untouched.
inline TrajectorySet apply_norm(TrajectorySet ts, const NormStats& stats) {
    for (auto& e : ts.engines)
        for (auto& row : e.rows) row.features = apply_norm_row(row.features, stats);
    return ts;
}

}  // namespace rulgp
