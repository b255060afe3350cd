#include "jan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <system_error>

#include "jan/error.hpp"
#include "jan/netpbm.hpp"
#include "jan/run_config.hpp"

namespace jan {

int predict_label(const Tensor& probs) {
    if (probs.size() == 0) throw ShapeError("predict_label: empty probability vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    return static_cast<int>(best);
}

ConfusionMatrix::ConfusionMatrix(int classes) : k_(classes) {
    if (classes < 1) throw ConfigError("confusion matrix needs at least one class");
    counts_.assign(static_cast<std::size_t>(classes) * static_cast<std::size_t>(classes), 0);
}

std::uint64_t ConfusionMatrix::at(int truth, int predicted) const {
    if (truth < 0 || truth >= k_ || predicted < 0 || predicted >= k_) {
        throw DataError("confusion index (" + std::to_string(truth) + "," + std::to_string(predicted) +
                        ") outside " + std::to_string(k_) + " classes");
    }
    return counts_[static_cast<std::size_t>(truth * k_ + predicted)];
}

void ConfusionMatrix::add(int truth, int predicted) {
    if (truth < 0 || truth >= k_ || predicted < 0 || predicted >= k_) {
        throw DataError("label (" + std::to_string(truth) + "," + std::to_string(predicted) + ") >= K = " +
                        std::to_string(k_));
    }
    ++counts_[static_cast<std::size_t>(truth * k_ + predicted)];
    ++total_;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, int classes) {
    if (truth.size() != predicted.size()) {
        throw DataError("confusion: " + std::to_string(truth.size()) + " true labels but " +
                        std::to_string(predicted.size()) + " predictions");
    }
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
    return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw DataError("metrics: confusion matrix is empty (N = 0)");
    const int k = cm.classes();
    const auto n = static_cast<double>(cm.total());
    MetricsReport r;
    std::uint64_t trace = 0;
    for (int c = 0; c < k; ++c) {
        std::uint64_t tp = cm.at(c, c), fn = 0, fp = 0;
        for (int o = 0; o < k; ++o) {
            if (o == c) continue;
            fn += cm.at(c, o);
            fp += cm.at(o, c);
        }
        const std::uint64_t tn = cm.total() - tp - fn - fp;
        trace += tp;
        ClassMetrics m;
        if (tp + fn > 0) {
            m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
        } else {
            r.flags.push_back("class " + std::to_string(c) + " has no true samples; recall counted as 0");
        }
        if (tn + fp > 0) {
            m.specificity = static_cast<double>(tn) / static_cast<double>(tn + fp);
        } else {
            r.flags.push_back("class " + std::to_string(c) + " has no negative samples; specificity counted as 0");
        }
        r.sensitivity += m.recall;
        r.specificity += m.specificity;
        r.per_class.push_back(m);
    }
    r.accuracy = static_cast<double>(trace) / n;
    r.sensitivity /= k;
    r.specificity /= k;
    return r;
}

Evaluation evaluate(const JointNetwork& net, const Dataset& data) {
    if (data.size() == 0) throw DataError("cannot evaluate an empty dataset");
    const int k = net.config().n_classes;
    Evaluation out{ConfusionMatrix(k), {}};
    for (const auto& s : data.samples) {
        if (s.label < 0 || s.label >= k) {
            throw DataError("sample " + s.source_id + " has label " + std::to_string(s.label) + " >= K = " +
                            std::to_string(k));
        }
        out.cm.add(s.label, predict_label(forward_backbone(net, s.image)));
    }
    out.report = metrics(out.cm);
    return out;
}

namespace {

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
    return buf;
}

long long hundredths(double percent_value) { return std::llround(percent_value * 100.0); }

std::string pad(const std::string& s, std::size_t width) {
    // Display width: count UTF-8 lead bytes only.
    std::size_t cols = 0;
    for (unsigned char ch : s) cols += (ch & 0xC0) != 0x80;
    return cols >= width ? s : s + std::string(width - cols, ' ');
}

} // namespace

std::string format_report(const std::string& name, const MetricsReport& report, const ConfusionMatrix& cm,
                          std::span<const std::string> class_names) {
    std::ostringstream os;
    os << "model: " << name << "\n";
    os << "samples: " << cm.total() << "\n";
    os << pad("accuracy", 14) << percent(report.accuracy) << "\n";
    os << pad("sensitivity", 14) << percent(report.sensitivity) << "\n";
    os << pad("specificity", 14) << percent(report.specificity) << "\n";
    os << "\n" << pad("class", 14) << pad("recall", 10) << "specificity\n";
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const std::string label = c < class_names.size() ? class_names[c] : std::to_string(c);
        os << pad(label, 14) << pad(percent(report.per_class[c].recall), 10)
           << percent(report.per_class[c].specificity) << "\n";
    }
    os << "\nconfusion (rows = true, columns = predicted)\n";
    for (int t = 0; t < cm.classes(); ++t) {
        for (int p = 0; p < cm.classes(); ++p) os << (p ? " " : "") << cm.at(t, p);
        os << "\n";
    }
    for (const auto& f : report.flags) os << "flag: " << f << "\n";
    return os.str();
}

std::string format_report_kv(const MetricsReport& report, const ConfusionMatrix& cm) {
    std::ostringstream os;
    os << "n=" << cm.total() << "\n";
    os << "classes=" << cm.classes() << "\n";
    os << "accuracy=" << format_double(report.accuracy) << "\n";
    os << "sensitivity=" << format_double(report.sensitivity) << "\n";
    os << "specificity=" << format_double(report.specificity) << "\n";
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        os << "class" << c << ".recall=" << format_double(report.per_class[c].recall) << "\n";
        os << "class" << c << ".specificity=" << format_double(report.per_class[c].specificity) << "\n";
    }
    for (int t = 0; t < cm.classes(); ++t) {
        os << "confusion" << t << "=";
        for (int p = 0; p < cm.classes(); ++p) os << (p ? "," : "") << cm.at(t, p);
        os << "\n";
    }
    os << "flags=" << report.flags.size() << "\n";
    return os.str();
}

std::string delta_cell(double percent_a, double percent_b) {
    const long long d = hundredths(percent_b) - hundredths(percent_a);
    const long long mag = d < 0 ? -d : d;
    char buf[48];
    if (d == 0) {
        std::snprintf(buf, sizeof buf, "0.00");
    } else {
        std::snprintf(buf, sizeof buf, "%s%lld.%02lld %s", d > 0 ? "+" : "−", mag / 100, mag % 100,
                      d > 0 ? "↑" : "↓");
    }
    return buf;
}

std::string compare_report(const std::string& name_a, const MetricsReport& a, const std::string& name_b,
                           const MetricsReport& b) {
    if (a.per_class.size() != b.per_class.size()) {
        throw ConfigError("compare: reports have " + std::to_string(a.per_class.size()) + " and " +
                          std::to_string(b.per_class.size()) + " classes");
    }
    const std::size_t w = std::max<std::size_t>({14, name_a.size() + 2, name_b.size() + 2});
    std::ostringstream os;
    os << pad("metric", 14) << pad(name_a, w) << pad(name_b, w) << "delta\n";
    auto row = [&](const std::string& label, double va, double vb) {
        os << pad(label, 14) << pad(percent(va), w) << pad(percent(vb), w) << delta_cell(va * 100.0, vb * 100.0)
           << "\n";
    };
    row("accuracy", a.accuracy, b.accuracy);
    row("sensitivity", a.sensitivity, b.sensitivity);
    row("specificity", a.specificity, b.specificity);
    for (std::size_t c = 0; c < a.per_class.size(); ++c) {
        row("class" + std::to_string(c) + ".recall", a.per_class[c].recall, b.per_class[c].recall);
        row("class" + std::to_string(c) + ".spec", a.per_class[c].specificity, b.per_class[c].specificity);
    }
    return os.str();
}

std::vector<std::filesystem::path> export_attention(const JointNetwork& net, const Tensor& image,
                                                    const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        throw DataError("cannot create output directory " + out_dir.string());
    }
    const JointOutput out = forward_joint(net, image);
    std::vector<std::filesystem::path> written;
    for (int i = 1; i <= static_cast<int>(out.attention_maps.size()); ++i) {
        const Tensor map = extract_attention(out, i);
        std::vector<std::uint8_t> px(map.size());
        for (std::size_t j = 0; j < map.size(); ++j) {
            px[j] = static_cast<std::uint8_t>(std::lround(std::clamp(map[j], 0.0, 1.0) * 255.0));
        }
        const auto path = out_dir / ("attn_stage" + std::to_string(i) + ".pgm");
        write_pgm(path, map.dim(2), map.dim(1), px);
        written.push_back(path);
    }
    return written;
}

} // namespace jan
