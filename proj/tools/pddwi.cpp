// Command-line surface for the decomposed-DWI response-prediction
// pipeline: phantom generation, physiological decomposition, feature
// extraction, training with optional hyper-tuning, prediction, evaluation,
// the map-subset ablation harness and an ROI decay plot.
//
// Exit codes: 0 success, 1 usage, 2 data/format, 3 numeric failure.
// Errors print a single machine-parseable line: "pddwi: error: <kind>: ...".

#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pddwi/io.hpp"
#include "pddwi/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pddwi;

namespace {

int cmd_phantom(const std::string& spec_path, const std::string& out_dir) {
    const CohortSpec spec = load_cohort_spec(spec_path);
    const auto cohort = generate_cohort(spec);

    json patients = json::array();
    std::vector<ClinicalRecord> records;
    std::vector<std::string> ids;
    std::vector<int> labels;

    for (const auto& p : cohort) {
        json tps = json::object();
        for (const auto& study : p.studies) {
            const std::string tp = to_string(study.time_point);
            const std::string rel_dwi = p.id + "/" + tp + "/dwi.nii";
            const std::string rel_mask = p.id + "/" + tp + "/mask.nii";

            const Dims3 d = study.mask.dims();
            write_nifti((fs::path(out_dir) / rel_dwi).string(),
                        {d.nx, d.ny, d.nz, study.bvalues.size()}, study.spacing,
                        study.signal.data(), NiftiType::f32);
            std::vector<double> mask_data(study.mask.size());
            for (std::size_t i = 0; i < mask_data.size(); ++i)
                mask_data[i] = study.mask[i] ? 1.0 : 0.0;
            write_nifti((fs::path(out_dir) / rel_mask).string(), {d.nx, d.ny, d.nz},
                        study.spacing, mask_data, NiftiType::u8);

            tps[tp] = {{"dwi", rel_dwi},
                       {"bvalues", study.bvalues.values()},
                       {"mask", rel_mask}};
        }
        patients.push_back({{"id", p.id}, {"label", p.label}, {"timepoints", std::move(tps)}});
        records.push_back(p.clinical);
        ids.push_back(p.id);
        labels.push_back(p.label);
    }

    write_clinical_csv((fs::path(out_dir) / "clinical.csv").string(), records);
    write_labels_csv((fs::path(out_dir) / "labels.csv").string(), ids, labels);
    atomic_write_text((fs::path(out_dir) / "manifest.json").string(),
                      json{{"clinical_csv", "clinical.csv"}, {"patients", std::move(patients)}}
                              .dump(2) +
                          "\n");
    std::cout << "wrote cohort of " << cohort.size() << " patients to " << out_dir << "\n";
    return 0;
}

int cmd_decompose(const std::string& manifest_path, const std::string& out_dir) {
    const auto manifest = load_manifest(manifest_path);
    std::size_t n_maps = 0;
    for (const auto& p : manifest.patients) {
        for (const auto& [tp, entry] : p.timepoints) {
            const auto study = load_study(manifest, p, tp);
            const auto maps = decompose_study(study);
            for (const auto& [name, map] : maps) {
                const fs::path dir = fs::path(out_dir) / p.id / to_string(tp);
                const Dims3 d = map.data.dims();
                write_nifti((dir / (name + ".nii")).string(), {d.nx, d.ny, d.nz}, map.spacing,
                            map.data.data(), NiftiType::f32);
                std::vector<double> valid(map.valid.size());
                for (std::size_t i = 0; i < valid.size(); ++i)
                    valid[i] = map.valid[i] ? 1.0 : 0.0;
                write_nifti((dir / (name + "_valid.nii")).string(), {d.nx, d.ny, d.nz},
                            map.spacing, valid, NiftiType::u8);
                ++n_maps;
            }
        }
    }
    std::cout << "wrote " << n_maps << " parameter maps to " << out_dir << "\n";
    return 0;
}

int cmd_extract(const std::string& manifest_path, const std::string& config_path,
                const std::string& out_path) {
    const auto manifest = load_manifest(manifest_path);
    const RunConfig cfg = load_run_config(config_path);
    const auto features = cohort_features_from_manifest(manifest, cfg.map_subset, cfg.timepoints,
                                                        cfg.discretization, &std::cerr);
    const FeatureMatrix X = assemble(features, cfg.map_subset, cfg.timepoints);
    write_feature_matrix_csv(out_path, X);
    std::cout << "wrote " << X.n_rows() << " x " << X.n_cols() << " feature matrix to "
              << out_path << "\n";
    return 0;
}

int cmd_train(const std::string& features_path, const std::string& config_path,
              const std::string& out_path) {
    const RunConfig cfg = load_run_config(config_path);
    const FeatureMatrix X = read_feature_matrix_csv(features_path);
    if (!X.has_labels())
        throw DataError(features_path + ": training requires a label column");

    TrainConfig best_train = cfg.train;
    std::size_t best_k = cfg.select_k;
    if (cfg.grid) {
        const auto grid = expand_grid(*cfg.grid, cfg.train, cfg.select_k);
        const auto outcome =
            cross_validate(X, grid, cfg.folds, cfg.seed, cfg.auto_scale_pos_weight);
        best_train = outcome.best.config;
        best_k = outcome.best.select_k;
        std::cout << "cross-validation over " << grid.size() << " candidates: best mean AUC "
                  << format_double(outcome.mean_auc[outcome.best_index]) << " (max_depth="
                  << best_train.max_depth << ", min_child_weight=" << best_train.min_child_weight
                  << ", subsample=" << best_train.subsample << ", k=" << best_k << ")\n";
    }

    if (cfg.auto_scale_pos_weight)
        best_train.scale_pos_weight = compute_scale_pos_weight(X.labels());

    const auto report = select_top_k(X, best_k);
    const auto model = train(X.select_columns(report.selected), best_train);
    save_model(out_path, model);
    save_selection(out_path + ".selection.json", report);
    std::cout << "wrote model (" << model.trees.size() << " trees, " << model.schema.size()
              << " features) to " << out_path << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& features_path,
                const std::string& out_path) {
    const auto model = load_model(model_path);
    const FeatureMatrix X = read_feature_matrix_csv(features_path);
    const FeatureMatrix selected = X.select_columns(model.schema);
    const auto scores = predict_proba(model, selected);
    write_predictions_csv(out_path, X.ids(), scores);
    std::cout << "wrote " << scores.size() << " predictions to " << out_path << "\n";
    return 0;
}

int cmd_evaluate(const std::string& preds_path, const std::string& labels_path,
                 const std::string& out_path, double threshold) {
    const auto preds = read_id_value_csv(preds_path, "score");
    const auto labels = read_id_value_csv(labels_path, "label");
    std::map<std::string, double> label_by_id;
    for (const auto& [id, v] : labels) label_by_id[id] = v;

    std::vector<double> scores;
    std::vector<int> y;
    for (const auto& [id, score] : preds) {
        const auto it = label_by_id.find(id);
        if (it == label_by_id.end())
            throw DataError(labels_path + ": no label for patient '" + id + "'");
        scores.push_back(score);
        y.push_back(static_cast<int>(it->second));
    }

    const auto report = evaluate_scores(scores, y, threshold);
    atomic_write_text(out_path, metrics_to_json(report).dump(2) + "\n");
    std::cout << "auc=" << format_double(report.auc) << " f1=" << format_double(report.f1)
              << " kappa=" << format_double(report.kappa) << " n=" << report.n << "\n";
    return 0;
}

int cmd_ablate(const std::string& manifest_path, const std::string& config_path,
               const std::string& out_path) {
    const auto manifest = load_manifest(manifest_path);
    const RunConfig cfg = load_run_config(config_path);

    bool have_ser = false;
    for (const auto& p : manifest.patients)
        for (const auto& [tp, e] : p.timepoints) have_ser |= e.extra_map_paths.count("SER") > 0;

    const auto configs =
        cfg.configurations.empty() ? default_ablation_configs(have_ser) : cfg.configurations;

    std::set<std::string> all_maps;
    for (const auto& c : configs) all_maps.insert(c.maps.begin(), c.maps.end());

    const auto features = cohort_features_from_manifest(
        manifest, all_maps, {TimePoint::T0, TimePoint::T1, TimePoint::T2}, cfg.discretization,
        &std::cerr);
    const auto rows = ablation_report(features, configs, cfg);

    atomic_write_text(out_path, ablation_csv(rows));
    const fs::path json_path = fs::path(out_path).replace_extension(".json");
    atomic_write_text(json_path.string(), ablation_json(rows).dump(2) + "\n");
    std::cout << "wrote " << rows.size() << " ablation rows to " << out_path << "\n";
    return 0;
}

int cmd_plot_decay(const std::string& manifest_path, const std::string& patient,
                   const std::string& timepoint, const std::string& out_path) {
    const auto manifest = load_manifest(manifest_path);
    const TimePoint tp = parse_time_point(timepoint);
    for (const auto& p : manifest.patients) {
        if (p.id != patient) continue;
        const auto study = load_study(manifest, p, tp);
        atomic_write_text(out_path, render_decay_svg(study));
        std::cout << "wrote decay plot to " << out_path << "\n";
        return 0;
    }
    throw DataError(manifest_path + ": no patient '" + patient + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Physiologically decomposed DWI pipeline for treatment-response prediction"};
    app.require_subcommand(1);

    std::string spec, manifest, config, features, model, preds, labels, out, patient, timepoint;
    double threshold = kDefaultThreshold;

    auto* phantom = app.add_subcommand("phantom", "Generate a synthetic cohort on disk");
    phantom->add_option("--spec", spec, "Cohort spec JSON")->required();
    phantom->add_option("--out", out, "Output directory")->required();

    auto* decompose = app.add_subcommand("decompose", "Write parameter-map volumes per study");
    decompose->add_option("--manifest", manifest, "Cohort manifest JSON")->required();
    decompose->add_option("--out", out, "Output directory")->required();

    auto* extract = app.add_subcommand("extract", "Extract the cohort feature matrix");
    extract->add_option("--manifest", manifest, "Cohort manifest JSON")->required();
    extract->add_option("--config", config, "Run config JSON")->required();
    extract->add_option("--out", out, "Output features CSV")->required();

    auto* train = app.add_subcommand("train", "Train the classifier (grid search if configured)");
    train->add_option("--features", features, "Features CSV with labels")->required();
    train->add_option("--config", config, "Run config JSON")->required();
    train->add_option("--out", out, "Output model JSON")->required();

    auto* predict = app.add_subcommand("predict", "Score patients with a trained model");
    predict->add_option("--model", model, "Model JSON")->required();
    predict->add_option("--features", features, "Features CSV")->required();
    predict->add_option("--out", out, "Output predictions CSV")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Compute AUC / F1 / kappa from predictions");
    evaluate->add_option("--preds", preds, "Predictions CSV")->required();
    evaluate->add_option("--labels", labels, "Labels CSV")->required();
    evaluate->add_option("--out", out, "Output metrics JSON")->required();
    evaluate->add_option("--threshold", threshold, "Decision threshold (default 0.5)");

    auto* ablate = app.add_subcommand("ablate", "Per-configuration, per-time-point comparison");
    ablate->add_option("--manifest", manifest, "Cohort manifest JSON")->required();
    ablate->add_option("--config", config, "Run config JSON")->required();
    ablate->add_option("--out", out, "Output report CSV (JSON twin written alongside)")->required();

    auto* plot = app.add_subcommand("plot-decay", "ROI-averaged log-signal decay plot (SVG)");
    plot->add_option("--manifest", manifest, "Cohort manifest JSON")->required();
    plot->add_option("--patient", patient, "Patient id")->required();
    plot->add_option("--timepoint", timepoint, "Time point (T0/T1/T2)")->required();
    plot->add_option("--out", out, "Output SVG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "pddwi: error: usage: " << e.what() << "\n";
        return 1;
    }

    try {
        if (*phantom) return cmd_phantom(spec, out);
        if (*decompose) return cmd_decompose(manifest, out);
        if (*extract) return cmd_extract(manifest, config, out);
        if (*train) return cmd_train(features, config, out);
        if (*predict) return cmd_predict(model, features, out);
        if (*evaluate) return cmd_evaluate(preds, labels, out, threshold);
        if (*ablate) return cmd_ablate(manifest, config, out);
        if (*plot) return cmd_plot_decay(manifest, patient, timepoint, out);
    } catch (const NumericError& e) {
        std::cerr << "pddwi: error: numeric: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "pddwi: error: data: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "pddwi: error: data: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "pddwi: error: usage: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "pddwi: error: numeric: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
