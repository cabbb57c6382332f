#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pddwi/io.hpp"
#include "pddwi/rng.hpp"

using namespace pddwi;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const auto dir = fs::temp_directory_path() / "pddwi_io_tests";
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("clinical CSV: full row parses into a typed record") {
    const auto path = (temp_dir() / "clinical.csv").string();
    atomic_write_text(path,
                      "patient_id,age,race,lesion_type,hr_her2,grade,diameter_cm\n"
                      "P1,45,white,mass,HR+/HER2-,High,3.2\n"
                      "P2,61,black,nonmass,HR-/HER2+,,2.0\n");
    const auto recs = read_clinical_csv(path);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].patient_id == "P1");
    CHECK(recs[0].age == 45.0);
    CHECK(recs[0].race == "white");
    CHECK(recs[0].hr_her2 == "HR+/HER2-");
    CHECK(recs[0].grade == TumorGrade::High);
    CHECK(recs[0].diameter_cm == 3.2);
    CHECK_FALSE(recs[1].grade.has_value());  // empty cell means missing
}

TEST_CASE("clinical CSV: parse failures are row- and column-addressed") {
    const auto path = (temp_dir() / "bad_clinical.csv").string();
    atomic_write_text(path,
                      "patient_id,age,race,lesion_type,hr_her2,grade,diameter_cm\n"
                      "P1,45,white,mass,HR+/HER2-,High,abc\n");
    try {
        (void)read_clinical_csv(path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("diameter_cm") != std::string::npos);
    }
}

TEST_CASE("clinical CSV: missing required column is rejected") {
    const auto path = (temp_dir() / "missing_col.csv").string();
    atomic_write_text(path, "patient_id,age,race,lesion_type,hr_her2,grade\nP1,45,w,m,HR+/HER2-,High\n");
    try {
        (void)read_clinical_csv(path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("diameter_cm") != std::string::npos);
    }
}

TEST_CASE("clinical CSV round-trips through the writer") {
    std::vector<ClinicalRecord> recs(2);
    recs[0] = {"P1", 45, "white", "mass", "HR+/HER2-", TumorGrade::High, 3.25};
    recs[1] = {"P2", 61, "black", "nonmass", "HR-/HER2-", std::nullopt, 1.5};
    const auto path = (temp_dir() / "rt_clinical.csv").string();
    write_clinical_csv(path, recs);
    const auto loaded = read_clinical_csv(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].diameter_cm == 3.25);
    CHECK(loaded[1].grade == std::nullopt);
    CHECK(loaded[1].race == "black");
}

TEST_CASE("feature matrix CSV round-trips with and without labels") {
    Rng rng(3);
    std::vector<double> values;
    for (int i = 0; i < 12; ++i) values.push_back(rng.uniform(-1e3, 1e3));
    FeatureMatrix X({"c0", "c1", "c2"}, {"P1", "P2", "P3", "P4"}, values, {0, 1, 0, 1});

    const auto path = (temp_dir() / "features.csv").string();
    write_feature_matrix_csv(path, X);
    const auto Y = read_feature_matrix_csv(path);
    CHECK(Y.columns() == X.columns());
    CHECK(Y.ids() == X.ids());
    CHECK(Y.labels() == X.labels());
    CHECK(Y.values() == X.values());  // format_double is round-trip exact

    FeatureMatrix unlabeled({"c0"}, {"P1"}, {0.5});
    const auto path2 = (temp_dir() / "features_nolabel.csv").string();
    write_feature_matrix_csv(path2, unlabeled);
    const auto Z = read_feature_matrix_csv(path2);
    CHECK_FALSE(Z.has_labels());
    CHECK(Z.values() == unlabeled.values());
}

TEST_CASE("predictions and labels CSV round-trip") {
    const auto preds_path = (temp_dir() / "preds.csv").string();
    write_predictions_csv(preds_path, {"P1", "P2"}, {0.125, 0.875});
    const auto preds = read_id_value_csv(preds_path, "score");
    REQUIRE(preds.size() == 2);
    CHECK(preds[0] == std::pair<std::string, double>{"P1", 0.125});

    const auto labels_path = (temp_dir() / "labels.csv").string();
    write_labels_csv(labels_path, {"P1", "P2"}, {1, 0});
    const auto labels = read_id_value_csv(labels_path, "label");
    CHECK(labels[1] == std::pair<std::string, double>{"P2", 0.0});
}

TEST_CASE("model JSON round-trips to bit-identical predictions") {
    Rng rng(9);
    std::vector<std::string> cols{"a", "b", "c"};
    std::vector<std::string> ids;
    std::vector<double> values;
    std::vector<int> labels;
    for (int r = 0; r < 30; ++r) {
        ids.push_back("P" + std::to_string(r));
        for (int c = 0; c < 3; ++c) values.push_back(rng.uniform(-2, 2));
        labels.push_back(r % 2);
    }
    FeatureMatrix X(cols, ids, values, labels);
    TrainConfig cfg;
    cfg.n_rounds = 12;
    cfg.subsample = 0.8;
    cfg.seed = 5;
    const auto model = train(X, cfg);

    const auto path = (temp_dir() / "model.json").string();
    save_model(path, model);
    const auto loaded = load_model(path);

    CHECK(loaded.schema == model.schema);
    CHECK(loaded.base_score == model.base_score);
    CHECK(loaded.config.subsample == model.config.subsample);
    const auto pa = predict_proba(model, X);
    const auto pb = predict_proba(loaded, X);
    CHECK(pa == pb);
}

TEST_CASE("model loader rejects wrong format tags") {
    const auto path = (temp_dir() / "notamodel.json").string();
    atomic_write_text(path, "{\"format\": \"something/9\"}\n");
    CHECK_THROWS_AS((void)load_model(path), DataError);
}

TEST_CASE("selection report JSON round-trips, including infinite scores") {
    SelectionReport report;
    report.scores = {{"a", 1.5}, {"b", std::numeric_limits<double>::infinity()}, {"c", 0.0}};
    report.selected = {"b", "a"};
    const auto path = (temp_dir() / "selection.json").string();
    save_selection(path, report);
    const auto loaded = load_selection(path);
    CHECK(loaded.selected == report.selected);
    REQUIRE(loaded.scores.size() == 3);
    CHECK(loaded.scores[0].second == 1.5);
    CHECK(std::isinf(loaded.scores[1].second));
    CHECK(loaded.scores[2].second == 0.0);
}

TEST_CASE("manifest loading validates files and duplicate ids") {
    const auto dir = temp_dir() / "manifest_case";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // Minimal single-patient cohort on disk.
    const Dims3 dims{2, 3, 3};
    std::vector<double> signal(4 * dims.count(), 100.0);
    std::vector<double> mask(dims.count(), 1.0);
    write_nifti((dir / "dwi.nii").string(), {3, 3, 2, 4}, {4, 2, 2}, signal, NiftiType::f32);
    write_nifti((dir / "mask.nii").string(), {3, 3, 2}, {4, 2, 2}, mask, NiftiType::u8);
    atomic_write_text((dir / "clinical.csv").string(),
                      "patient_id,age,race,lesion_type,hr_her2,grade,diameter_cm\n"
                      "P1,50,white,mass,HR+/HER2-,High,2.0\n");

    const std::string manifest_json = R"({
      "clinical_csv": "clinical.csv",
      "patients": [
        {"id": "P1", "label": 1, "timepoints": {
          "T0": {"dwi": "dwi.nii", "bvalues": [0, 100, 600, 800], "mask": "mask.nii"}
        }}
      ]
    })";
    atomic_write_text((dir / "manifest.json").string(), manifest_json);

    const auto manifest = load_manifest((dir / "manifest.json").string());
    REQUIRE(manifest.patients.size() == 1);
    CHECK(manifest.patients[0].label == 1);

    const auto study = load_study(manifest, manifest.patients[0], TimePoint::T0);
    CHECK(study.signal.channels() == 4);
    CHECK(study.mask.dims() == dims);
    CHECK(validate_study(study).empty());
    CHECK(study.spacing.dz == 4.0);

    SUBCASE("missing file") {
        atomic_write_text((dir / "broken.json").string(),
                          R"({"patients": [{"id": "P1", "timepoints": {
                              "T0": {"dwi": "nope.nii", "bvalues": [0,100,600,800],
                                     "mask": "mask.nii"}}}]})");
        CHECK_THROWS_AS((void)load_manifest((dir / "broken.json").string()), DataError);
    }
    SUBCASE("duplicate patient id") {
        atomic_write_text(
            (dir / "dup.json").string(),
            R"({"patients": [
                {"id": "P1", "timepoints": {"T0": {"dwi": "dwi.nii",
                 "bvalues": [0,100,600,800], "mask": "mask.nii"}}},
                {"id": "P1", "timepoints": {"T0": {"dwi": "dwi.nii",
                 "bvalues": [0,100,600,800], "mask": "mask.nii"}}}]})");
        CHECK_THROWS_AS((void)load_manifest((dir / "dup.json").string()), DataError);
    }
}

TEST_CASE("per-b-value DWI files assemble into one study") {
    const auto dir = temp_dir() / "per_b";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const Dims3 dims{2, 2, 2};
    std::vector<double> mask(dims.count(), 1.0);
    write_nifti((dir / "mask.nii").string(), {2, 2, 2}, {1, 1, 1}, mask, NiftiType::u8);
    for (int b : {0, 100, 600, 800}) {
        std::vector<double> ch(dims.count(), 100.0 * std::exp(-b * 1.5e-3));
        write_nifti((dir / ("b" + std::to_string(b) + ".nii")).string(), {2, 2, 2}, {1, 1, 1},
                    ch, NiftiType::f32);
    }
    atomic_write_text((dir / "m.json").string(),
                      R"({"patients": [{"id": "P1", "timepoints": {"T1": {
                          "dwi": ["b0.nii", "b100.nii", "b600.nii", "b800.nii"],
                          "bvalues": [0, 100, 600, 800], "mask": "mask.nii"}}}]})");
    const auto manifest = load_manifest((dir / "m.json").string());
    const auto study = load_study(manifest, manifest.patients[0], TimePoint::T1);
    CHECK(study.time_point == TimePoint::T1);
    CHECK(study.signal.at(0, 0, 0, 0) == 100.0f);
    CHECK(study.signal.at(3, 1, 1, 1) ==
          doctest::Approx(100.0 * std::exp(-800 * 1.5e-3)).epsilon(1e-6));
}

TEST_CASE("run config parses subsets and grid") {
    const json j = json::parse(R"({
        "map_subset": ["ADC_0_800", "SER"],
        "timepoints": ["T0", "T2"],
        "bin_count": 16,
        "select_k": 40,
        "folds": 3,
        "seed": 21,
        "train": {"n_rounds": 50, "max_depth": 2, "scale_pos_weight": 1.5},
        "grid": {"max_depth": [2, 3]}
    })");
    const auto cfg = run_config_from_json(j, "test");
    CHECK(cfg.map_subset == std::set<std::string>{"ADC_0_800", "SER"});
    CHECK(cfg.timepoints == std::set<TimePoint>{TimePoint::T0, TimePoint::T2});
    CHECK(cfg.discretization.bin_count == 16);
    CHECK(cfg.select_k == 40);
    CHECK(cfg.folds == 3);
    CHECK(cfg.train.n_rounds == 50);
    CHECK(cfg.train.seed == 21);  // inherits the pipeline seed
    CHECK_FALSE(cfg.auto_scale_pos_weight);
    REQUIRE(cfg.grid.has_value());

    const auto grid = expand_grid(*cfg.grid, cfg.train, cfg.select_k);
    CHECK(grid.size() == 2 * 3 * 3);  // depths x mcw defaults x subsample defaults
    CHECK(grid[0].select_k == 40);
}

TEST_CASE("cohort spec parses shifts and noise") {
    const json j = json::parse(R"({
        "n_patients": 10, "prevalence": 0.3, "dims": [4, 6, 6],
        "spacing": [4, 2, 2], "snr": 30, "seed": 2,
        "responder": {"f_scale": [1.0, 0.7, 0.4]}
    })");
    const auto spec = cohort_spec_from_json(j, "test");
    CHECK(spec.n_patients == 10);
    CHECK(spec.noise == NoiseModel::rician);
    CHECK(spec.snr == 30.0);
    CHECK(spec.responder.f_scale == std::array<double, 3>{1.0, 0.7, 0.4});
    CHECK(spec.responder.d_scale == std::array<double, 3>{1.0, 1.15, 1.3});
}

TEST_CASE("format_double survives the round trip") {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(-1e6, 1e6) * std::pow(10.0, static_cast<double>(rng.below(8)));
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
}
