#pragma once

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

#include "rulgp/cmapss.hpp"
#include "rulgp/common.hpp"

namespace testutil {

/// Locates the turbofan dataset directory (train_FD001.txt etc.), checking
/// $RULGP_DATA_DIR and ./data. Tests that need the real files skip when this
/// returns nullopt.
inline std::optional<std::string> dataset_dir() {
    namespace fs = std::filesystem;
    std::vector<std::string> candidates;
    if (const char* env = std::getenv("RULGP_DATA_DIR")) candidates.push_back(env);
    candidates.push_back("data");
    candidates.push_back("../data");
    for (const auto& dir : candidates)
        if (fs::exists(fs::path(dir) / "train_FD001.txt")) return dir;
    return std::nullopt;
}

/// Builds a small in-memory trajectory set; feature j of cycle t is
/// filler(engine_id, t, j) quantized to 1e-4 so text round trips are exact.
template <typename F>
rulgp::TrajectorySet make_set(rulgp::SetKind kind, const std::vector<std::pair<int, int>>& engines,
                              F&& filler) {
    rulgp::TrajectorySet ts;
    ts.kind = kind;
    for (const auto& [id, n_cycles] : engines) {
        rulgp::EngineTrajectory e;
        e.id = id;
        for (int t = 1; t <= n_cycles; ++t) {
            rulgp::SensorRow row;
            row.engine_id = id;
            row.cycle = t;
            row.features.resize(rulgp::kFeatureCount);
            for (int j = 0; j < rulgp::kFeatureCount; ++j)
                row.features[j] = std::round(filler(id, t, j) * 1e4) / 1e4;
            e.rows.push_back(std::move(row));
        }
        ts.engines.push_back(std::move(e));
    }
    return ts;
}

inline rulgp::TrajectorySet make_constant_set(rulgp::SetKind kind,
                                              const std::vector<std::pair<int, int>>& engines,
                                              double value = 0.0) {
    return make_set(kind, engines, [value](int, int, int) { return value; });
}

}  // namespace testutil
