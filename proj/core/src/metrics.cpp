#include "lscl/metrics.hpp"

#include <cstdio>

#include "lscl/error.hpp"

namespace lscl {

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::array<ClassScores, kNumLabels> class_scores(const ConfusionMatrix& m) {
    std::array<ClassScores, kNumLabels> out{};
    for (std::size_t k = 0; k < kNumLabels; ++k) {
        std::size_t tp = m[k][k];
        std::size_t row = 0;
        std::size_t col = 0;
        for (std::size_t j = 0; j < kNumLabels; ++j) {
            row += m[k][j];
            col += m[j][k];
        }
        auto& s = out[k];
        s.support = row;
        s.precision = ratio(tp, col);
        s.recall = ratio(tp, row);
        const double pr = s.precision + s.recall;
        s.f1 = pr == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / pr;
    }
    return out;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::size_t EvalReport::total() const {
    std::size_t n = 0;
    for (const auto& row : confusion)
        for (auto v : row) n += v;
    return n;
}

double macro_f1(const ConfusionMatrix& confusion) {
    const auto scores = class_scores(confusion);
    double sum = 0.0;
    std::size_t present = 0;
    for (const auto& s : scores) {
        if (s.support == 0) continue;
        sum += s.f1;
        ++present;
    }
    return present == 0 ? 0.0 : sum / static_cast<double>(present);
}

EvalReport compute_metrics(std::span<const LabelPair> pairs) {
    if (pairs.empty()) throw ValidationError("compute_metrics: no (truth, prediction) pairs");
    EvalReport report;
    for (const auto& [truth, pred] : pairs) ++report.confusion[label_index(truth)][label_index(pred)];

    report.per_class = class_scores(report.confusion);
    std::size_t correct = 0;
    for (std::size_t k = 0; k < kNumLabels; ++k) correct += report.confusion[k][k];
    report.accuracy = ratio(correct, pairs.size());

    double f1_sum = 0.0;
    double recall_sum = 0.0;
    std::size_t present = 0;
    for (const auto& s : report.per_class) {
        if (s.support == 0) continue;
        f1_sum += s.f1;
        recall_sum += s.recall;
        ++present;
    }
    report.macro_f1 = f1_sum / static_cast<double>(present);
    report.macro_recall = recall_sum / static_cast<double>(present);
    return report;
}

void tally_answer_accuracy(EvalReport& report, std::span<const LabelPair> pairs, std::span<const bool> correct) {
    if (pairs.size() != correct.size()) throw ValidationError("tally_answer_accuracy: size mismatch");
    std::array<std::size_t, kNumLabels> truth_n{}, truth_ok{}, pred_n{}, pred_ok{};
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto t = label_index(pairs[i].first);
        const auto p = label_index(pairs[i].second);
        ++truth_n[t];
        ++pred_n[p];
        if (correct[i]) {
            ++truth_ok[t];
            ++pred_ok[p];
        }
    }
    for (std::size_t k = 0; k < kNumLabels; ++k) {
        report.answer_accuracy_by_truth[k] = {100.0 * ratio(truth_ok[k], truth_n[k]), truth_n[k]};
        report.answer_accuracy_by_prediction[k] = {100.0 * ratio(pred_ok[k], pred_n[k]), pred_n[k]};
    }
}

nlohmann::json to_json(const EvalReport& report) {
    using nlohmann::json;
    json j;
    j["macro_f1"] = report.macro_f1;
    j["accuracy"] = report.accuracy;
    j["macro_recall"] = report.macro_recall;
    j["micro_recall"] = report.accuracy;
    j["samples"] = report.total();
    json per_class = json::object();
    json labels = json::array();
    json matrix = json::array();
    json by_truth = json::object();
    json by_pred = json::object();
    for (auto label : kAllLabels) {
        const auto k = label_index(label);
        const auto& s = report.per_class[k];
        const std::string name(to_string(label));
        per_class[name] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
        labels.push_back(name);
        json row = json::array();
        for (auto pred : kAllLabels) row.push_back(report.confusion[k][label_index(pred)]);
        matrix.push_back(row);
        by_truth[name] = {{"accuracy_percent", report.answer_accuracy_by_truth[k].accuracy_percent},
                          {"count", report.answer_accuracy_by_truth[k].count}};
        by_pred[name] = {{"accuracy_percent", report.answer_accuracy_by_prediction[k].accuracy_percent},
                         {"count", report.answer_accuracy_by_prediction[k].count}};
    }
    j["per_class"] = per_class;
    j["confusion"] = {{"labels", labels}, {"rows", "truth"}, {"columns", "prediction"}, {"matrix", matrix}};
    j["answer_accuracy_by_label"] = {{"truth", by_truth}, {"prediction", by_pred}};
    j["metadata"] = report.metadata;
    return j;
}

std::string csv_header() {
    return "method,model_id,thresholds,macro_f1,accuracy,macro_recall,f1_know,f1_sciolism,f1_unknow,samples,"
           "config_fingerprint\n";
}

std::string csv_row(const EvalReport& report) {
    auto meta = [&](const char* key) {
        auto it = report.metadata.find(key);
        return it == report.metadata.end() ? std::string{} : it->second;
    };
    std::string row = meta("method") + "," + meta("model_id") + "," + meta("thresholds") + ",";
    row += fmt_double(report.macro_f1) + "," + fmt_double(report.accuracy) + "," + fmt_double(report.macro_recall);
    for (auto label : kAllLabels) row += "," + fmt_double(report.scores(label).f1);
    row += "," + std::to_string(report.total()) + "," + meta("config_fingerprint") + "\n";
    return row;
}

std::string confusion_csv(const EvalReport& report) {
    std::string out = "truth\\prediction,Know,Sciolism,Unknow\n";
    for (auto truth : kAllLabels) {
        out += std::string(to_string(truth));
        for (auto pred : kAllLabels) out += "," + std::to_string(report.confusion[label_index(truth)][label_index(pred)]);
        out += "\n";
    }
    return out;
}

std::string answer_accuracy_csv(const EvalReport& report) {
    std::string out = "labels,know_accuracy_percent,know_count,sciolism_accuracy_percent,sciolism_count,"
                      "unknow_accuracy_percent,unknow_count\n";
    auto row = [&](const char* name, const std::array<LabelAccuracy, kNumLabels>& acc) {
        out += name;
        for (auto label : kAllLabels) {
            const auto& a = acc[label_index(label)];
            char buf[64];
            std::snprintf(buf, sizeof buf, ",%.2f,%zu", a.accuracy_percent, a.count);
            out += buf;
        }
        out += "\n";
    };
    row("truth", report.answer_accuracy_by_truth);
    row("prediction", report.answer_accuracy_by_prediction);
    return out;
}

}  // namespace lscl
