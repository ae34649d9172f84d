#include "lscl/boundary.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "lscl/error.hpp"
#include "lscl/metrics.hpp"

namespace lscl {

using nlohmann::json;

json to_json(const ThresholdPair& p) {
    return json{{"t1", p.t1}, {"t2", p.t2}, {"train_macro_f1", p.train_macro_f1}, {"m_bins", p.m_bins}, {"ties_seen", p.ties_seen}};
}

ThresholdPair threshold_pair_from_json(const json& j) {
    ThresholdPair p;
    p.t1 = j.at("t1").get<double>();
    p.t2 = j.at("t2").get<double>();
    p.train_macro_f1 = j.value("train_macro_f1", 0.0);
    p.m_bins = j.value("m_bins", p.m_bins);
    p.ties_seen = j.value("ties_seen", std::size_t{0});
    if (p.t2 > p.t1) throw ValidationError("thresholds: t2 exceeds t1");
    return p;
}

KnowledgeLabel map_label(double c_hat, double t1, double t2) {
    if (t2 > t1) throw ValidationError("map_label: t2 (" + std::to_string(t2) + ") exceeds t1 (" + std::to_string(t1) + ")");
    if (!(c_hat >= 0.0 && c_hat <= 1.0)) throw ValidationError("map_label: confidence " + std::to_string(c_hat) + " outside [0,1]");
    if (c_hat >= t1) return KnowledgeLabel::Know;
    if (c_hat <= t2) return KnowledgeLabel::Unknow;
    return KnowledgeLabel::Sciolism;
}

KnowledgeLabel map_label(double c_hat, const ThresholdPair& thresholds) {
    return map_label(c_hat, thresholds.t1, thresholds.t2);
}

double grid_value(int index, int m_bins) { return static_cast<double>(index) / static_cast<double>(m_bins - 1); }

ThresholdPair search_thresholds(std::span<const ScoredConfidence> records, int m_bins) {
    if (m_bins < 3) throw ConfigError("search_thresholds: m_bins must be at least 3 for an admissible pair to exist");
    if (records.empty()) throw ValidationError("search_thresholds: no records");

    std::array<std::vector<double>, kNumLabels> by_truth;
    for (const auto& [c, truth] : records) {
        if (!(c >= 0.0 && c <= 1.0)) throw ValidationError("search_thresholds: confidence " + std::to_string(c) + " outside [0,1]");
        by_truth[label_index(truth)].push_back(c);
    }
    for (auto& v : by_truth) std::sort(v.begin(), v.end());

    const auto at_least = [](const std::vector<double>& v, double t) {
        return static_cast<std::size_t>(v.end() - std::lower_bound(v.begin(), v.end(), t));
    };
    const auto at_most = [](const std::vector<double>& v, double t) {
        return static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), t) - v.begin());
    };
    const auto below = [](const std::vector<double>& v, double t) {
        return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), t) - v.begin());
    };

    const std::size_t know = label_index(KnowledgeLabel::Know);
    const std::size_t sciolism = label_index(KnowledgeLabel::Sciolism);
    const std::size_t unknow = label_index(KnowledgeLabel::Unknow);

    ThresholdPair best;
    best.m_bins = m_bins;
    bool have = false;
    for (int k1 = 1; k1 <= m_bins - 1; ++k1) {
        const double t1 = grid_value(m_bins - 1 - k1, m_bins);
        for (int k2 = 1; k2 <= m_bins - 1; ++k2) {
            const double t2 = grid_value(k2, m_bins);
            if (t2 > t1) continue;
            ConfusionMatrix cm{};
            for (std::size_t truth = 0; truth < kNumLabels; ++truth) {
                const auto& v = by_truth[truth];
                const std::size_t n_know = at_least(v, t1);
                const std::size_t n_unknow = t2 < t1 ? at_most(v, t2) : below(v, t1);
                cm[truth][know] = n_know;
                cm[truth][unknow] = n_unknow;
                cm[truth][sciolism] = v.size() - n_know - n_unknow;
            }
            const double score = macro_f1(cm);
            if (!have || score >= best.train_macro_f1) {
                if (have && score == best.train_macro_f1) ++best.ties_seen;
                best.t1 = t1;
                best.t2 = t2;
                best.train_macro_f1 = score;
                have = true;
            }
        }
    }
    return best;
}

}  // namespace lscl
