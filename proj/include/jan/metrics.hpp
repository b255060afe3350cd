#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "jan/dataset.hpp"
#include "jan/joint_net.hpp"

namespace jan {

/// Index of the largest probability; ties go to the lowest index.
int predict_label(const Tensor& probs);

/// counts[t][p]: samples of true class t predicted as p.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int classes);

    int classes() const noexcept { return k_; }
    std::uint64_t at(int truth, int predicted) const;
    void add(int truth, int predicted);
    std::uint64_t total() const noexcept { return total_; }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    int k_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, int classes);

struct ClassMetrics {
    double recall = 0.0;      // TP / (TP + FN)
    double specificity = 0.0; // TN / (TN + FP)
};

/// One-vs-rest per class, macro-averaged. A class whose denominator is zero
/// contributes 0 and is listed in `flags`.
struct MetricsReport {
    double accuracy = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    std::vector<ClassMetrics> per_class;
    std::vector<std::string> flags;
};

MetricsReport metrics(const ConfusionMatrix& cm);

struct Evaluation {
    ConfusionMatrix cm{2};
    MetricsReport report;
};

/// Classifies every sample with the classifier path and scores it.
Evaluation evaluate(const JointNetwork& net, const Dataset& data);

/// Percent table with two decimals; one row per metric.
std::string format_report(const std::string& name, const MetricsReport& report, const ConfusionMatrix& cm,
                          std::span<const std::string> class_names);
/// Line-oriented key=value form of the same content.
std::string format_report_kv(const MetricsReport& report, const ConfusionMatrix& cm);

/// Side-by-side percent table of two reports with signed deltas b - a and
/// up/down arrows, e.g. "+9.00 ↑" or "−0.32 ↓". Deltas are taken between the
/// two-decimal values shown.
std::string compare_report(const std::string& name_a, const MetricsReport& a, const std::string& name_b,
                           const MetricsReport& b);

/// Delta cell text for two percentages, as used by compare_report.
std::string delta_cell(double percent_a, double percent_b);

/// Writes attn_stage<i>.pgm (i = 1..n) into `out_dir`: round(map * 255), maxval 255.
std::vector<std::filesystem::path> export_attention(const JointNetwork& net, const Tensor& image,
                                                    const std::filesystem::path& out_dir);

} // namespace jan
