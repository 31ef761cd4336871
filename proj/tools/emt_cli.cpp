#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "emt/csv.hpp"
#include "emt/pipeline.hpp"

namespace fs = std::filesystem;
using namespace emt;

namespace {

struct CommonOpts {
    std::string manifest_path;
    std::string out_override;
    std::string mode;       // "", "global", "condition"
    std::string grid = "B"; // A | B | C
    int64_t seed = -1;      // <0: use the manifest seed list
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_mode, bool with_grid,
                bool with_seed) {
    cmd->add_option("--manifest", o.manifest_path, "run manifest file")->required();
    cmd->add_option("--out", o.out_override, "output directory override");
    if (with_mode)
        cmd->add_option("--mode", o.mode, "normalization mode (global|condition)")
            ->check(CLI::IsMember({"global", "condition"}));
    if (with_grid)
        cmd->add_option("--grid", o.grid, "experiment condition (A|B|C)")
            ->check(CLI::IsMember({"A", "B", "C"}));
    if (with_seed)
        cmd->add_option("--seed", o.seed, "train/evaluate a single seed")
            ->check(CLI::NonNegativeNumber);
}

RunManifest load_opts(const CommonOpts& o) {
    RunManifest m = load_manifest(o.manifest_path);
    if (!o.out_override.empty()) m.out_dir = o.out_override;
    if (!o.mode.empty())
        m.norm_mode = o.mode == "global" ? NormalizationMode::Global
                                         : NormalizationMode::ConditionSpecific;
    if (o.seed >= 0) m.seeds = {(uint64_t)o.seed};
    return m;
}

void write_provenance(const std::string& dir, const RunManifest& m) {
    fs::create_directories(dir);
    std::ofstream out(fs::path(dir) / "provenance.txt", std::ios::binary);
    if (!out) fail(ErrorCategory::MissingInput, "cannot write provenance in " + dir);
    out << provenance_line(m) << "\n";
}

CellSpec cell_from_opts(const RunManifest& m, const CommonOpts& o) {
    CellSpec cell;
    cell.kind = m.model;
    cell.grid = grid_condition_from_name(o.grid[0]);
    cell.weights = m.weights_kg;
    std::sort(cell.weights.begin(), cell.weights.end());
    return cell;
}

int cmd_synth(const CommonOpts& o) {
    RunManifest m = load_manifest(o.manifest_path);
    if (!o.out_override.empty()) m.data_dir = o.out_override;
    DatasetPaths paths = generate_dataset(m);
    write_provenance(m.data_dir, m);
    std::printf("wrote %zu recordings (+rest) under %s\n", paths.emg.size(),
                m.data_dir.c_str());
    return 0;
}

int cmd_preprocess(const CommonOpts& o) {
    RunManifest m = load_opts(o);
    LoadedData data = load_dataset(
        m, m.weights_kg,
        m.use_activation && m.activation_target == ActivationTarget::Oracle);
    PreparedFeatures pf =
        prepare_features(data, m, m.norm_mode, false, /*keep_signals=*/true);

    fs::path dir = fs::path(m.out_dir) / "preprocessed";
    fs::create_directories(dir);
    for (size_t i = 0; i < pf.processed.size(); ++i) {
        std::string name = "processed_" + data.condition[i].label() + "_t" +
                           std::to_string(data.trial[i]) + ".csv";
        write_emg_csv((dir / name).string(), pf.processed[i]);
    }
    write_maxima_csv((fs::path(m.out_dir) / "maxima.csv").string(), pf.maxima, m);
    if (pf.use_activation)
        write_activation_csv((fs::path(m.out_dir) / "activation.csv").string(),
                             pf.activation, m);
    write_provenance(m.out_dir, m);
    std::printf("wrote %zu processed recordings under %s\n", pf.processed.size(),
                dir.string().c_str());
    return 0;
}

int cmd_features(const CommonOpts& o) {
    RunManifest m = load_opts(o);
    bool tp_only = o.grid == "C";
    LoadedData data = load_dataset(
        m, m.weights_kg,
        m.use_activation && m.activation_target == ActivationTarget::Oracle);
    PreparedFeatures pf = prepare_features(data, m, m.norm_mode, tp_only);

    fs::create_directories(m.out_dir);
    write_features_csv((fs::path(m.out_dir) / "features.csv").string(), pf.features,
                       m);
    write_maxima_csv((fs::path(m.out_dir) / "maxima.csv").string(), pf.maxima, m);
    if (pf.use_activation)
        write_activation_csv((fs::path(m.out_dir) / "activation.csv").string(),
                             pf.activation, m);
    write_provenance(m.out_dir, m);
    std::printf("wrote %zu feature rows x %zu columns\n", pf.features.n_rows(),
                pf.features.n_cols());
    return 0;
}

int cmd_torque(const CommonOpts& o) {
    RunManifest m = load_opts(o);
    DatasetPaths paths = dataset_paths(m);
    AnthropometricTable table = AnthropometricTable::for_sex(m.body.sex);
    TorqueSeries all;
    size_t n = 0;
    for (size_t i = 0; i < paths.condition.size(); ++i) {
        if (!fs::exists(paths.markers[i]))
            fail(ErrorCategory::MissingInput, "missing markers " + paths.markers[i]);
        MarkerTrajectory traj = load_markers_csv(paths.markers[i]);
        JointAngles angles = compute_angles(traj);
        RawTorques torques =
            compute_torques(angles, m.body, table, paths.condition[i].weight_kg,
                            m.gravity, m.eq1_variant);
        all.append(targets_from_torques(torques, paths.condition[i], m,
                                        paths.trial[i]));
        ++n;
    }
    if (n == 0)
        fail(ErrorCategory::MissingInput, "no marker files under " + m.data_dir);
    fs::create_directories(m.out_dir);
    write_targets_csv((fs::path(m.out_dir) / "targets.csv").string(), all, m);
    write_provenance(m.out_dir, m);
    std::printf("wrote %zu reference torque rows\n", all.n_rows());
    return 0;
}

PreparedFeatures load_prepared(const RunManifest& m) {
    fs::path features_path = fs::path(m.out_dir) / "features.csv";
    fs::path targets_path = fs::path(m.out_dir) / "targets.csv";
    if (!fs::exists(features_path))
        fail(ErrorCategory::MissingInput,
             "missing input " + features_path.string() + " (run `features` first)");
    if (!fs::exists(targets_path))
        fail(ErrorCategory::MissingInput,
             "missing input " + targets_path.string() + " (run `torque` first)");
    PreparedFeatures pf;
    pf.features = load_features_csv(features_path.string());
    pf.targets = load_targets_csv(targets_path.string());
    if (pf.features.n_rows() != pf.targets.n_rows())
        fail(ErrorCategory::Shape, "features/targets row mismatch");
    fs::path maxima_path = fs::path(m.out_dir) / "maxima.csv";
    if (fs::exists(maxima_path)) pf.maxima = load_maxima_csv(maxima_path.string());
    fs::path act_path = fs::path(m.out_dir) / "activation.csv";
    if (fs::exists(act_path)) {
        pf.use_activation = true;
        pf.activation = load_activation_csv(act_path.string());
    }
    return pf;
}

std::string bundle_path(const RunManifest& m, const CellSpec& cell, uint64_t seed) {
    return (fs::path(m.out_dir) / "bundles" /
            (cell.id() + "_s" + std::to_string(seed) + ".emtb"))
        .string();
}

int cmd_train(const CommonOpts& o) {
    RunManifest m = load_opts(o);
    CellSpec cell = cell_from_opts(m, o);
    PreparedFeatures pf = load_prepared(m);
    if (pf.maxima.mode != cell.norm_mode() &&
        (pf.maxima.global.size() + pf.maxima.per_condition.size()) > 0)
        fail(ErrorCategory::Config,
             "stored features were normalized in a different mode than condition " +
                 std::string(1, grid_condition_name(cell.grid)) + " expects");
    CellInputs in = assemble_inputs(pf, m, cell);
    fs::create_directories(fs::path(m.out_dir) / "bundles");
    for (uint64_t seed : m.seeds) {
        SeedRun run = train_seed(in, pf, m, cell, seed);
        save_bundle(bundle_path(m, cell, seed), run.state);
        std::printf("seed %llu: %d epochs, best val loss %.6f\n",
                    (unsigned long long)seed, run.train.epochs_run,
                    run.train.best_val_loss);
    }
    write_provenance(m.out_dir, m);
    return 0;
}

int cmd_eval(const CommonOpts& o) {
    RunManifest m = load_opts(o);
    CellSpec cell = cell_from_opts(m, o);
    PreparedFeatures pf = load_prepared(m);
    CellInputs in = assemble_inputs(pf, m, cell);

    CellReport report;
    report.model = cell.model_name();
    report.weights_label = cell.weights_label();
    report.condition = grid_condition_name(cell.grid);
    for (uint64_t seed : m.seeds) {
        std::string path = bundle_path(m, cell, seed);
        if (!fs::exists(path))
            fail(ErrorCategory::MissingInput,
                 "missing bundle " + path + " (run `train` first)");
        RegressorState state = load_bundle(path);
        std::unique_ptr<Network> net = network_from_state(state);
        report.per_seed.push_back(evaluate_network(*net, in, seed));
    }
    aggregate_cell(report);

    fs::create_directories(fs::path(m.out_dir) / "cells");
    std::string out =
        (fs::path(m.out_dir) / "cells" / (cell.id() + ".csv")).string();
    write_cell_csv(out, report, m);
    for (size_t j = 0; j < 3; ++j)
        std::printf("%s: rmse %.4f +/- %.4f, rho %.4f, r2 %.4f\n", kJointNames[j],
                    report.mean[j].rmse, report.stdev[j].rmse, report.mean[j].rho,
                    report.mean[j].r2);
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int cmd_report(const CommonOpts& o) {
    RunManifest m = load_opts(o);
    ProtocolResult result = run_protocol(m);
    std::printf("wrote %s (%zu cells, %zu band plots)\n", result.table_path.c_str(),
                result.cells.size(), result.svg_paths.size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"surface-EMG to joint-torque estimation pipeline"};
    app.require_subcommand(1);

    CommonOpts synth_o, pre_o, feat_o, torque_o, train_o, eval_o, report_o;
    CLI::App* c_synth = app.add_subcommand("synth", "generate a synthetic dataset");
    add_common(c_synth, synth_o, false, false, false);
    CLI::App* c_pre =
        app.add_subcommand("preprocess", "filter, normalize and smooth recordings");
    add_common(c_pre, pre_o, true, false, false);
    CLI::App* c_feat =
        app.add_subcommand("features", "extract windowed feature matrices");
    add_common(c_feat, feat_o, true, true, false);
    CLI::App* c_torque =
        app.add_subcommand("torque", "compute static-equilibrium reference torques");
    add_common(c_torque, torque_o, false, false, false);
    CLI::App* c_train =
        app.add_subcommand("train", "train regressors on stored features");
    add_common(c_train, train_o, false, true, true);
    CLI::App* c_eval =
        app.add_subcommand("eval", "evaluate stored bundles on the test split");
    add_common(c_eval, eval_o, false, true, true);
    CLI::App* c_report =
        app.add_subcommand("report", "run the full experiment grid and aggregate");
    add_common(c_report, report_o, false, false, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error[usage]: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (c_synth->parsed()) return cmd_synth(synth_o);
        if (c_pre->parsed()) return cmd_preprocess(pre_o);
        if (c_feat->parsed()) return cmd_features(feat_o);
        if (c_torque->parsed()) return cmd_torque(torque_o);
        if (c_train->parsed()) return cmd_train(train_o);
        if (c_eval->parsed()) return cmd_eval(eval_o);
        if (c_report->parsed()) return cmd_report(report_o);
    } catch (const Error& e) {
        std::cerr << "error[" << e.category_name() << "]: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return static_cast<int>(ErrorCategory::Internal);
    }
    return 0;
}
