// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "jan/checkpoint.hpp"
#include "jan/gradcheck_suite.hpp"
#include "jan/losses.hpp"
#include "jan/metrics.hpp"
#include "jan/ops.hpp"
#include "jan/rng.hpp"
#include "jan/scheduler.hpp"
#include "jan/synth.hpp"
#include "jan/trainer.hpp"

using namespace jan;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

Tensor random_image(Rng& rng, const ArchConfig& a) {
    const auto s = static_cast<std::size_t>(a.input_size);
    Tensor t({static_cast<std::size_t>(a.input_channels), s, s});
    for (double& v : t.data()) v = rng.uniform();
    return t;
}

bool all_zero(const Tensor& t) {
    for (double v : t.data())
        if (v != 0.0) return false;
    return true;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// 1
Outcome gradient_correctness() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::string where, failed;
    for (const auto& c : reference_gradchecks(kGradcheckSeed, 1e-4)) {
        if (c.report.max_relative_error >= worst) {
            worst = c.report.max_relative_error;
            where = c.name + " " + c.report.worst_location;
        }
        if (!c.report.pass) failed += " " + c.name;
    }
    const double secs = seconds_since(t0);
    return {failed.empty() && worst <= 1e-4 && secs <= 60.0,
            "max rel err " + fmt("%.3g", worst) + " at " + where + ", " + fmt("%.1f", secs) + " s" +
                (failed.empty() ? "" : ", failed:" + failed)};
}

// 2
Outcome loss_routing() {
    ArchConfig a;
    a.input_size = 16;
    a.base_channels = 4;
    double worst_lin = 0.0;
    bool routed = true;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const JointNetwork net = JointNetwork::build(a, seed);
        Rng rng(1000 + seed);
        const Sample s{random_image(rng, a), static_cast<int>(rng.below(3)), "random"};
        auto grads = [&](double phi, double* loss) {
            Tape tape;
            const SampleGraph g = record_sample_loss(tape, net, s, phi, TrainMode::Joint);
            *loss = g.loss.value().item();
            return tape.backward(g.loss);
        };
        double l0, l1, lh;
        const Gradients g1 = grads(1.0, &l1);
        const Gradients g0 = grads(0.0, &l0);
        grads(0.5, &lh);
        for (ParamId id : net.group(ParamGroup::Decoder)) routed = routed && all_zero(g1.at(id));
        for (ParamId id : net.group(ParamGroup::ClassifierHead)) routed = routed && all_zero(g0.at(id));
        worst_lin = std::max(worst_lin, std::abs(lh - 0.5 * (l0 + l1)));
    }
    return {routed && worst_lin <= 1e-12,
            std::string(routed ? "decoder/head gradients exactly zero" : "nonzero routed gradient") +
                ", max |L(0.5)-(L(0)+L(1))/2| " + fmt("%.3g", worst_lin) + " over 10 seeds"};
}

// 3
Outcome shape_audit() {
    int configs = 0;
    std::string bad;
    for (int n : {1, 2, 3}) {
        for (int size : {16, 32, 64}) {
            if (size % (1 << (n + 1)) != 0) continue;
            ArchConfig a;
            a.n_stages = n;
            a.input_size = size;
            a.base_channels = 2;
            const JointNetwork net = JointNetwork::build(a, 1);
            Rng rng(static_cast<std::uint64_t>(n * 100 + size));
            const Tensor img = random_image(rng, a);
            Tape tape;
            const JointGraph g = record_joint(tape, net, tape.constant(img));
            ++configs;
            const std::string tag = " n=" + std::to_string(n) + ",size=" + std::to_string(size);
            if (g.reconstruction.shape() != img.shape()) bad += tag + ":recon";
            for (int i = 1; i <= n; ++i) {
                const Shape& x = g.attention[static_cast<std::size_t>(i - 1)].shape();
                const auto want = static_cast<std::size_t>(size >> (n - i));
                if (x[1] != want || x[2] != want) bad += tag + ":X" + std::to_string(i);
                // C_i output depth vs upsample(X_{i-1}) depth
                const Tensor skip_out = conv2d(g.skips[static_cast<std::size_t>(n - i)].value(),
                                               net.parameter(net.skip(i).weight).value,
                                               net.parameter(net.skip(i).bias).value, 1, Padding::Same);
                const Tensor& prev = i == 1 ? g.bottleneck.value() : g.attention[static_cast<std::size_t>(i - 2)].value();
                if (skip_out.dim(0) != upsample2x2(prev).dim(0)) bad += tag + ":C" + std::to_string(i);
            }
        }
    }
    return {bad.empty() && configs == 9,
            std::to_string(configs) + " configs audited" + (bad.empty() ? "" : ", mismatches:" + bad)};
}

// 4
Outcome metrics_oracle() {
    std::mt19937_64 gen(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = 2 + static_cast<int>(gen() % 4);
        ConfusionMatrix cm(k);
        std::vector<std::vector<std::uint64_t>> counts(static_cast<std::size_t>(k), std::vector<std::uint64_t>(static_cast<std::size_t>(k)));
        for (int t = 0; t < k; ++t)
            for (int p = 0; p < k; ++p) {
                const std::uint64_t c = gen() % 30;
                counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] = c;
                for (std::uint64_t i = 0; i < c; ++i) cm.add(t, p);
            }
        if (cm.total() == 0) cm.add(0, 0), counts[0][0] = 1;
        // One-vs-rest by scanning every cell.
        double n = 0, trace = 0, sens = 0, spec = 0;
        for (int t = 0; t < k; ++t)
            for (int p = 0; p < k; ++p) n += static_cast<double>(counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
        for (int c = 0; c < k; ++c) {
            double tp = 0, fn = 0, fp = 0, tn = 0;
            for (int t = 0; t < k; ++t)
                for (int p = 0; p < k; ++p) {
                    const double v = static_cast<double>(counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
                    if (t == c && p == c) tp += v;
                    else if (t == c) fn += v;
                    else if (p == c) fp += v;
                    else tn += v;
                }
            trace += tp;
            sens += tp + fn > 0 ? tp / (tp + fn) : 0.0;
            spec += tn + fp > 0 ? tn / (tn + fp) : 0.0;
        }
        const MetricsReport r = metrics(cm);
        worst = std::max({worst, std::abs(r.accuracy - trace / n), std::abs(r.sensitivity - sens / k),
                          std::abs(r.specificity - spec / k)});
    }
    ConfusionMatrix ref(2);
    for (int i = 0; i < 50; ++i) ref.add(0, 0);
    for (int i = 0; i < 10; ++i) ref.add(0, 1);
    for (int i = 0; i < 5; ++i) ref.add(1, 0);
    for (int i = 0; i < 35; ++i) ref.add(1, 1);
    const MetricsReport r = metrics(ref);
    const bool ref_ok = std::abs(r.accuracy - 0.85) <= 1e-12 && std::abs(r.sensitivity - 0.854167) <= 1e-6 &&
                        std::abs(r.specificity - 0.854167) <= 1e-6;
    return {worst <= 1e-12 && ref_ok, "max deviation " + fmt("%.3g", worst) + " over 1000 matrices; reference acc " +
                                          fmt("%.6f", r.accuracy) + " sens " + fmt("%.6f", r.sensitivity) +
                                          " spec " + fmt("%.6f", r.specificity)};
}

// 5
Outcome scheduler_conformance() {
    const std::vector<double> trace{1.0, 0.9, 0.91, 0.92, 0.93, 0.94};
    PlateauScheduler s(4, 0.1, 1e-7);
    double lr = 1e-4;
    int reductions = 0, at = -1;
    for (std::size_t e = 0; e < trace.size(); ++e) {
        const double next = s.update(trace[e], lr);
        if (next != lr) {
            ++reductions;
            at = static_cast<int>(e) + 1;
        }
        lr = next;
    }
    const bool ok = reductions == 1 && at == 6 && std::abs(lr - 1e-5) <= 1e-18;
    return {ok, std::to_string(reductions) + " reduction(s), at epoch " + std::to_string(at) + ", lr " + fmt("%.3g", lr)};
}

struct Runs {
    Dataset train, val, wild;
    TrainConfig config;
    ArchConfig arch;
};

struct TrainedModel {
    TrainResult result;
    double train_seconds = 0.0;
};

TrainedModel train_one(const Runs& r, TrainMode mode, std::uint64_t seed) {
    TrainConfig c = r.config;
    c.seed = seed;
    JointNetwork net = JointNetwork::build(r.arch, seed);
    const auto t0 = Clock::now();
    TrainedModel m{train(net, r.train, r.val, c, mode), 0.0};
    m.train_seconds = seconds_since(t0);
    return m;
}

// 6
Outcome learnability(const TrainedModel& m, const Runs& r) {
    const JointNetwork best = restore_network(m.result.best);
    const double acc = evaluate(best, r.val).report.accuracy;
    const double first_lu = m.result.log.front().train_unsupervised;
    const double last_lu = m.result.log.back().train_unsupervised;
    return {acc >= 0.95 && last_lu < first_lu && m.train_seconds <= 900.0,
            "val acc " + fmt("%.4f", acc) + " (best epoch " + std::to_string(m.result.best.epoch) + "), train L_u " +
                fmt("%.5f", first_lu) + " -> " + fmt("%.5f", last_lu) + ", " + fmt("%.0f", m.train_seconds) + " s"};
}

// 7
Outcome directional_robustness(const TrainedModel& joint_seed1, const Runs& r) {
    double joint_sum = 0.0, backbone_sum = 0.0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const TrainResult joint = seed == 1 ? joint_seed1.result : train_one(r, TrainMode::Joint, seed).result;
        const TrainResult backbone = train_one(r, TrainMode::Backbone, seed).result;
        const double ja = evaluate(restore_network(joint.best), r.wild).report.accuracy;
        const double ba = evaluate(restore_network(backbone.best), r.wild).report.accuracy;
        joint_sum += ja;
        backbone_sum += ba;
        per_seed += " s" + std::to_string(seed) + "=" + fmt("%.3f", ja) + "/" + fmt("%.3f", ba);
        std::printf("  seed %llu: joint %.4f, backbone %.4f on wild\n", static_cast<unsigned long long>(seed), ja, ba);
        std::fflush(stdout);
    }
    const double jm = joint_sum / 5.0, bm = backbone_sum / 5.0;
    return {jm >= bm, "mean wild acc joint " + fmt("%.4f", jm) + " vs backbone " + fmt("%.4f", bm) + " (joint/backbone:" +
                          per_seed + ")"};
}

// 8
Outcome determinism(const TrainedModel& m, const Runs& r) {
    ArchConfig a;
    a.input_size = 16;
    a.base_channels = 4;
    const Dataset tr = synth_generate(4, 16, Shift::None, 41);
    const Dataset va = synth_generate(2, 16, Shift::None, 42);
    TrainConfig c;
    c.epochs = 3;
    c.lr = 1e-3;
    auto run = [&](std::string* log) {
        JointNetwork net = JointNetwork::build(a, c.seed);
        TrainOptions opts;
        opts.on_epoch = [log](const EpochLog& row) { *log += format_log_row(row) + "\n"; };
        return encode_checkpoint(train(net, tr, va, c, TrainMode::Joint, opts).best);
    };
    std::string log_a, log_b;
    const bool same = run(&log_a) == run(&log_b) && log_a == log_b;

    const auto path = std::filesystem::temp_directory_path() / "jan_acceptance_model.ckpt";
    save_checkpoint(m.result.best, path);
    const Checkpoint loaded = load_checkpoint(path);
    std::filesystem::remove(path);
    const JointNetwork before = restore_network(m.result.best), after = restore_network(loaded);
    bool exact = loaded == m.result.best;
    for (const auto& s : r.val.samples) exact = exact && forward_backbone(before, s.image) == forward_backbone(after, s.image);
    const Evaluation ea = evaluate(before, r.val), eb = evaluate(after, r.val);
    exact = exact && ea.cm == eb.cm;
    return {same && exact, std::string(same ? "repeat run byte-identical" : "repeat run differs") + ", " +
                               (exact ? "save/load/eval bit-exact" : "save/load/eval differs")};
}

// 9
Outcome report_fidelity() {
    MetricsReport a, b;
    a.accuracy = 0.8340;
    b.accuracy = 0.9240;
    a.per_class = b.per_class = std::vector<ClassMetrics>(3);
    const std::string table = compare_report("baseline", a, "Joint", b);
    const std::string first = table.substr(table.find('\n') + 1, table.find('\n', table.find('\n') + 1) - table.find('\n') - 1);
    const bool ok = first.find("83.40") != std::string::npos && first.find("92.40") != std::string::npos &&
                    first.find("+9.00 ↑") != std::string::npos;
    return {ok, "accuracy row: '" + first + "'"};
}

} // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const Outcome& o) {
        std::printf("criterion %d [%s]: %s - %s\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    };
    auto guarded = [](const std::function<Outcome()>& f) {
        try {
            return f();
        } catch (const std::exception& e) {
            return Outcome{false, std::string("exception: ") + e.what()};
        }
    };

    report(1, "gradient correctness", guarded(gradient_correctness));
    report(2, "loss routing", guarded(loss_routing));
    report(3, "shape audit", guarded(shape_audit));
    report(4, "metrics oracle", guarded(metrics_oracle));
    report(5, "scheduler conformance", guarded(scheduler_conformance));

    Runs runs;
    runs.train = synth_generate(100, 32, Shift::None, 1);
    runs.val = synth_generate(30, 32, Shift::None, 2);
    runs.wild = synth_generate(100, 32, Shift::Wild, 3);
    TrainedModel joint1;
    bool have_joint1 = false;
    report(6, "desk-scale learnability", guarded([&] {
               joint1 = train_one(runs, TrainMode::Joint, 1);
               have_joint1 = true;
               return learnability(joint1, runs);
           }));
    report(7, "directional robustness", guarded([&] {
               if (!have_joint1) joint1 = train_one(runs, TrainMode::Joint, 1);
               have_joint1 = true;
               return directional_robustness(joint1, runs);
           }));
    report(8, "determinism and persistence", guarded([&] {
               if (!have_joint1) return Outcome{false, "no trained model available"};
               return determinism(joint1, runs);
           }));
    report(9, "report fidelity", guarded(report_fidelity));

    std::printf("%d of 9 criteria passed\n", 9 - failures);
    return failures == 0 ? 0 : 1;
}
