#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "lscl/types.hpp"

namespace lscl::oracle {

/// Macro-F1 over classes present in the truth labels, counted directly.
inline double macro_f1(std::span<const KnowledgeLabel> truth, std::span<const KnowledgeLabel> pred) {
    double sum = 0.0;
    int present = 0;
    for (const auto cls : {KnowledgeLabel::Unknow, KnowledgeLabel::Sciolism, KnowledgeLabel::Know}) {
        std::size_t tp = 0, fp = 0, fn = 0, support = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool t = truth[i] == cls;
            const bool p = pred[i] == cls;
            support += t;
            tp += t && p;
            fp += !t && p;
            fn += t && !p;
        }
        if (support == 0) continue;
        ++present;
        const double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        sum += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    return present ? sum / present : 0.0;
}

inline KnowledgeLabel partition(double c, double t1, double t2) {
    if (c >= t1) return KnowledgeLabel::Know;
    if (c <= t2) return KnowledgeLabel::Unknow;
    return KnowledgeLabel::Sciolism;
}

/// Exhaustive double loop over the candidate grid; returns the best score.
inline double best_grid_macro_f1(std::span<const std::pair<double, KnowledgeLabel>> records, int m_bins) {
    std::vector<KnowledgeLabel> truth;
    for (const auto& r : records) truth.push_back(r.second);
    std::vector<KnowledgeLabel> pred(records.size());
    double best = -1.0;
    for (int i = 1; i < m_bins; ++i) {
        const double t1 = static_cast<double>(m_bins - 1 - i) / (m_bins - 1);
        for (int j = 1; j < m_bins; ++j) {
            const double t2 = static_cast<double>(j) / (m_bins - 1);
            if (t2 > t1) continue;
            for (std::size_t n = 0; n < records.size(); ++n) pred[n] = partition(records[n].first, t1, t2);
            const double f = macro_f1(truth, pred);
            if (f > best) best = f;
        }
    }
    return best;
}

}  // namespace lscl::oracle
