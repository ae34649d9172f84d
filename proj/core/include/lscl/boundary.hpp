#pragma once

#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lscl/types.hpp"

namespace lscl {

struct ThresholdPair {
    double t1 = 1.0;  // upper: c_hat >= t1 is Know
    double t2 = 0.0;  // lower: c_hat <= t2 is Unknow
    double train_macro_f1 = 0.0;
    int m_bins = 100;
    std::size_t ties_seen = 0;

    bool operator==(const ThresholdPair&) const = default;
};

nlohmann::json to_json(const ThresholdPair& pair);
ThresholdPair threshold_pair_from_json(const nlohmann::json& j);

/// Know iff c_hat >= t1, Unknow iff c_hat <= t2, Sciolism otherwise.
/// Throws ValidationError when t2 > t1 or c_hat is outside [0, 1].
KnowledgeLabel map_label(double c_hat, const ThresholdPair& thresholds);
KnowledgeLabel map_label(double c_hat, double t1, double t2);

/// Candidate value k/(m_bins-1) on the uniform grid.
double grid_value(int index, int m_bins);

using ScoredConfidence = std::pair<double, KnowledgeLabel>;  // (c_hat, truth)

/// Grid search for the (t1, t2) pair maximizing macro-F1. Upper candidates
/// are 1 - k*step and lower candidates k*step for k = 1..m_bins-1, scanned t1
/// descending then t2 ascending; pairs with t2 > t1 are skipped and a later
/// pair replaces the incumbent on equal score.
ThresholdPair search_thresholds(std::span<const ScoredConfidence> records, int m_bins);

}  // namespace lscl
