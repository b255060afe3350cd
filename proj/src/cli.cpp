#include "jan/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "jan/checkpoint.hpp"
#include "jan/dataset.hpp"
#include "jan/error.hpp"
#include "jan/gradcheck_suite.hpp"
#include "jan/metrics.hpp"
#include "jan/run_config.hpp"
#include "jan/synth.hpp"
#include "jan/trainer.hpp"

namespace jan::cli {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + path.string());
    f << text;
    if (!f) throw DataError("write failed for " + path.string());
}

Dataset load_for(const ArchConfig& arch, const std::filesystem::path& dir) {
    Dataset d = load_directory(dir, arch.input_size, arch.input_channels);
    if (static_cast<int>(d.class_names.size()) != arch.n_classes) {
        throw DataError(dir.string() + ": found " + std::to_string(d.class_names.size()) +
                        " class directories, config has n_classes = " + std::to_string(arch.n_classes));
    }
    return d;
}

struct SynthArgs {
    std::string out;
    int per_class = 0;
    int size = 32;
    std::string shift = "none";
    std::uint64_t seed = 1;
};

int do_synth(const SynthArgs& a, std::ostream& out) {
    const Dataset d = synth_generate(a.per_class, a.size, parse_shift(a.shift), a.seed, 1);
    write_dataset(d, a.out);
    out << "wrote " << d.size() << " images to " << a.out << "\n";
    return kExitOk;
}

struct TrainArgs {
    std::string data;
    std::string val;
    std::string config;
    std::optional<double> phi;
    std::optional<std::string> mode;
    std::optional<int> folds;
    std::string out;
    std::string log;
};

int do_train(const TrainArgs& a, std::ostream& out) {
    RunConfig cfg = parse_config(a.config);
    std::vector<std::string> notes;
    auto note = [&](const char* key, const std::string& was, const std::string& now) {
        notes.push_back(std::string("flag overrides ") + key + ": " + was + " -> " + now);
    };
    if (a.phi) {
        note("phi", format_double(cfg.train.phi), format_double(*a.phi));
        cfg.train.phi = *a.phi;
    }
    if (a.mode) {
        RunConfig probe;
        apply_setting(probe, "mode", *a.mode, "--mode");
        note("mode", mode_name(cfg.mode), mode_name(probe.mode));
        cfg.mode = probe.mode;
    }
    if (a.folds) {
        note("folds", std::to_string(cfg.train.folds), std::to_string(*a.folds));
        cfg.train.folds = *a.folds;
    }
    cfg.validate();

    const Dataset data = load_for(cfg.arch, a.data);
    std::optional<Dataset> val;
    if (!a.val.empty()) {
        val = load_for(cfg.arch, a.val);
        notes.push_back("validation set " + a.val + "; folds not used");
    } else if (cfg.train.folds < 2) {
        throw ConfigError("folds must be >= 2 for k-fold training without --val, got " +
                          std::to_string(cfg.train.folds));
    }

    std::ostringstream log;
    {
        std::istringstream lines(format_config(cfg));
        for (std::string line; std::getline(lines, line);) log << "# " << line << "\n";
    }
    for (const auto& n : notes) log << "# " << n << "\n";
    log << kLogColumns << "\n";

    Checkpoint best;
    if (val) {
        JointNetwork net = JointNetwork::build(cfg.arch, cfg.train.seed);
        TrainOptions opts;
        opts.on_epoch = [&](const EpochLog& row) { log << format_log_row(row) << "\n"; };
        TrainResult r = train(net, data, *val, cfg.train, cfg.mode, opts);
        best = std::move(r.best);
        out << "best epoch " << best.epoch << ", val_L " << format_double(best.best_val_loss) << ", val_acc "
            << format_double(r.best_val_accuracy) << "\n";
    } else {
        std::size_t current = static_cast<std::size_t>(-1);
        KFoldResult r = kfold_train(data, cfg.arch, cfg.train, cfg.mode, [&](std::size_t fold, const EpochLog& row) {
            if (fold != current) {
                log << "# fold=" << fold << "\n";
                current = fold;
            }
            log << format_log_row(row) << "\n";
        });
        log << "# best_fold=" << r.best_fold << "\n";
        best = r.best();
        out << "best fold " << r.best_fold << ", epoch " << best.epoch << ", val_L "
            << format_double(best.best_val_loss) << ", val_acc "
            << format_double(r.folds[r.best_fold].best_val_accuracy) << "\n";
    }
    save_checkpoint(best, a.out);
    if (!a.log.empty()) write_text(a.log, log.str());
    return kExitOk;
}

int do_eval(const std::string& model, const std::string& data_dir, const std::string& report, std::ostream& out) {
    const Checkpoint ckpt = load_checkpoint(model);
    const JointNetwork net = restore_network(ckpt);
    const Dataset data = load_for(net.config(), data_dir);
    const Evaluation ev = evaluate(net, data);
    const std::string text = format_report(model, ev.report, ev.cm, data.class_names);
    write_text(report, text);
    write_text(report + ".kv", format_report_kv(ev.report, ev.cm));
    out << text;
    return kExitOk;
}

int do_compare(const std::string& model_a, const std::string& model_b, const std::string& data_dir,
               const std::string& report, std::ostream& out) {
    const JointNetwork a = restore_network(load_checkpoint(model_a));
    const JointNetwork b = restore_network(load_checkpoint(model_b));
    if (a.config().n_classes != b.config().n_classes) {
        throw ConfigError("models disagree on n_classes: " + std::to_string(a.config().n_classes) + " vs " +
                          std::to_string(b.config().n_classes));
    }
    const Evaluation ea = evaluate(a, load_for(a.config(), data_dir));
    const Evaluation eb = evaluate(b, load_for(b.config(), data_dir));
    const std::string text = compare_report(model_a, ea.report, model_b, eb.report);
    write_text(report, text);
    out << text;
    return kExitOk;
}

int do_gradcheck(double tol, std::uint64_t seed, std::ostream& out) {
    bool ok = true;
    double worst = 0.0;
    for (const auto& c : reference_gradchecks(seed, tol)) {
        const auto& r = c.report;
        out << c.name << ": max_rel_err " << r.max_relative_error << " over " << r.entries_checked << " entries"
            << (r.worst_location.empty() ? "" : " (worst " + r.worst_location + ")");
        if (!r.failure.empty()) out << " failure: " << r.failure;
        out << (r.pass ? " PASS" : " FAIL") << "\n";
        ok = ok && r.pass;
        worst = std::max(worst, r.max_relative_error);
    }
    out << "max relative error " << worst << " (tolerance " << tol << ") " << (ok ? "PASS" : "FAIL") << "\n";
    return ok ? kExitOk : kExitNumeric;
}

int do_export(const std::string& model, const std::string& image, const std::string& out_dir, std::ostream& out) {
    const JointNetwork net = restore_network(load_checkpoint(model));
    const auto& c = net.config();
    const Tensor img = load_image(image, c.input_size, c.input_channels);
    for (const auto& p : export_attention(net, img, out_dir)) out << p.string() << "\n";
    return kExitOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Joint attention network: synthetic data, training, evaluation"};
    app.require_subcommand(1);

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic layered-scan dataset");
    synth->add_option("--out", sa.out, "Output directory")->required();
    synth->add_option("--per-class", sa.per_class, "Images per class")->required()->check(CLI::PositiveNumber);
    synth->add_option("--size", sa.size, "Image side length")->check(CLI::PositiveNumber);
    synth->add_option("--shift", sa.shift, "none or wild");
    synth->add_option("--seed", sa.seed, "Generator seed");

    TrainArgs ta;
    auto* trn = app.add_subcommand("train", "Train a model and save the best checkpoint");
    trn->add_option("--data", ta.data, "Dataset directory (one subdirectory per class)")->required();
    trn->add_option("--config", ta.config, "key = value config file")->required();
    trn->add_option("--phi", ta.phi, "Supervised loss weight, overrides the config");
    trn->add_option("--mode", ta.mode, "joint or backbone, overrides the config");
    trn->add_option("--folds", ta.folds, "Number of folds, overrides the config");
    trn->add_option("--val", ta.val, "Fixed validation directory instead of k-fold");
    trn->add_option("--out", ta.out, "Checkpoint path")->required();
    trn->add_option("--log", ta.log, "Training log path");

    std::string model, model_b, data_dir, report, image, out_dir;
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    ev->add_option("--model", model)->required();
    ev->add_option("--data", data_dir)->required();
    ev->add_option("--report", report, "Report path; key=value form is written to <report>.kv")->required();

    auto* cmp = app.add_subcommand("compare", "Compare two checkpoints on one dataset");
    cmp->add_option("--model-a", model)->required();
    cmp->add_option("--model-b", model_b)->required();
    cmp->add_option("--data", data_dir)->required();
    cmp->add_option("--report", report)->required();

    double tol = 1e-4;
    std::uint64_t gc_seed = kGradcheckSeed;
    auto* gc = app.add_subcommand("gradcheck", "Check gradients against central differences");
    gc->add_option("--tol", tol, "Maximum relative error")->check(CLI::PositiveNumber);
    gc->add_option("--seed", gc_seed, "Seed for inputs and network");

    auto* ex = app.add_subcommand("export-attn", "Write per-stage attention maps as PGM");
    ex->add_option("--model", model)->required();
    ex->add_option("--image", image)->required();
    ex->add_option("--out", out_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return kExitUsage;
    }

    try {
        if (*synth) return do_synth(sa, out);
        if (*trn) return do_train(ta, out);
        if (*ev) return do_eval(model, data_dir, report, out);
        if (*cmp) return do_compare(model, model_b, data_dir, report, out);
        if (*gc) return do_gradcheck(tol, gc_seed, out);
        if (*ex) return do_export(model, image, out_dir, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

} // namespace jan::cli
