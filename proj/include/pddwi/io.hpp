#pragma once

// File formats and persistence: CSV for tabular artifacts (clinical data,
// feature matrices, predictions, labels, reports), JSON for configuration,
// manifests, trained models and selection reports. Every artifact written
// here re-loads to an equal in-memory value; files are published with a
// temp-then-rename so readers never observe partial writes.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pddwi/clinical.hpp"
#include "pddwi/core.hpp"
#include "pddwi/features.hpp"
#include "pddwi/gbt.hpp"
#include "pddwi/metrics.hpp"
#include "pddwi/nifti.hpp"
#include "pddwi/phantom.hpp"
#include "pddwi/radiomics.hpp"

namespace pddwi {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// low-level helpers

inline void atomic_write_text(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot create '" + tmp.string() + "'");
        out << content;
        if (!out) throw DataError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Shortest digit string that round-trips a double exactly.
inline std::string format_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

// RFC-4180-ish CSV: quoted fields with embedded commas/quotes/newlines.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text,
                                                       const std::string& origin) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    std::size_t i = 0;
    const std::size_t n = text.size();

    auto end_field = [&]() {
        row.push_back(field);
        field.clear();
    };
    auto end_row = [&]() {
        end_field();
        rows.push_back(row);
        row.clear();
    };

    while (i < n) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < n && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            if (!field.empty())
                throw DataError(origin + ": stray quote in row " + std::to_string(rows.size() + 1));
            quoted = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            end_row();
        } else if (c != '\r') {
            field += c;
        }
        ++i;
    }
    if (quoted) throw DataError(origin + ": unterminated quoted field");
    if (!field.empty() || !row.empty()) end_row();
    return rows;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

inline double parse_number(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty())
        throw DataError(where + ": cannot parse number from '" + s + "'");
    return v;
}

// ---------------------------------------------------------------------------
// clinical CSV

inline const std::vector<std::string>& clinical_csv_columns() {
    static const std::vector<std::string> cols{"patient_id", "age",   "race",    "lesion_type",
                                               "hr_her2",    "grade", "diameter_cm"};
    return cols;
}

inline std::vector<ClinicalRecord> read_clinical_csv(const std::string& path) {
    const auto rows = parse_csv(read_text(path), path);
    if (rows.empty()) throw DataError(path + ": empty clinical file");

    std::map<std::string, std::size_t> col;
    for (std::size_t c = 0; c < rows[0].size(); ++c) col[rows[0][c]] = c;
    for (const auto& required : clinical_csv_columns())
        if (!col.count(required))
            throw DataError(path + ": missing required column '" + required + "'");

    std::vector<ClinicalRecord> records;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        if (cells.size() < rows[0].size())
            throw DataError(path + ": row " + std::to_string(r + 1) + ": too few fields");
        const std::string where = path + ": row " + std::to_string(r + 1);

        ClinicalRecord rec;
        rec.patient_id = cells[col["patient_id"]];
        rec.age = parse_number(cells[col["age"]], where + ", column 'age'");
        rec.race = cells[col["race"]];
        rec.lesion_type = cells[col["lesion_type"]];
        rec.hr_her2 = cells[col["hr_her2"]];
        const std::string& grade = cells[col["grade"]];
        rec.grade = grade.empty() ? std::nullopt : std::optional<TumorGrade>(parse_grade(grade));
        rec.diameter_cm = parse_number(cells[col["diameter_cm"]], where + ", column 'diameter_cm'");
        rec.validate();
        records.push_back(std::move(rec));
    }
    return records;
}

inline void write_clinical_csv(const std::string& path, const std::vector<ClinicalRecord>& recs) {
    std::ostringstream out;
    bool first = true;
    for (const auto& c : clinical_csv_columns()) {
        out << (first ? "" : ",") << c;
        first = false;
    }
    out << "\n";
    for (const auto& r : recs) {
        out << csv_escape(r.patient_id) << "," << format_double(r.age) << "," << csv_escape(r.race)
            << "," << csv_escape(r.lesion_type) << "," << csv_escape(r.hr_her2) << ","
            << (r.grade ? to_string(*r.grade) : "") << "," << format_double(r.diameter_cm) << "\n";
    }
    atomic_write_text(path, out.str());
}

// ---------------------------------------------------------------------------
// feature matrix / predictions / labels CSV

inline void write_feature_matrix_csv(const std::string& path, const FeatureMatrix& X) {
    std::ostringstream out;
    out << "patient_id";
    if (X.has_labels()) out << ",label";
    for (const auto& c : X.columns()) out << "," << csv_escape(c);
    out << "\n";
    for (std::size_t r = 0; r < X.n_rows(); ++r) {
        out << csv_escape(X.ids()[r]);
        if (X.has_labels()) out << "," << X.labels()[r];
        for (std::size_t c = 0; c < X.n_cols(); ++c) out << "," << format_double(X.at(r, c));
        out << "\n";
    }
    atomic_write_text(path, out.str());
}

inline FeatureMatrix read_feature_matrix_csv(const std::string& path) {
    const auto rows = parse_csv(read_text(path), path);
    if (rows.size() < 2) throw DataError(path + ": feature file needs a header and data rows");
    const auto& header = rows[0];
    if (header.empty() || header[0] != "patient_id")
        throw DataError(path + ": first column must be 'patient_id'");

    const bool labeled = header.size() > 1 && header[1] == "label";
    const std::size_t first_feature = labeled ? 2 : 1;

    std::vector<std::string> columns(header.begin() + static_cast<long>(first_feature),
                                     header.end());
    std::vector<std::string> ids;
    std::vector<int> labels;
    std::vector<double> values;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        if (cells.size() != header.size())
            throw DataError(path + ": row " + std::to_string(r + 1) + ": field count mismatch");
        ids.push_back(cells[0]);
        if (labeled)
            labels.push_back(static_cast<int>(
                parse_number(cells[1], path + ": row " + std::to_string(r + 1) + " label")));
        for (std::size_t c = first_feature; c < cells.size(); ++c)
            values.push_back(
                parse_number(cells[c], path + ": row " + std::to_string(r + 1) + ", column '" +
                                           header[c] + "'"));
    }
    return FeatureMatrix(std::move(columns), std::move(ids), std::move(values), std::move(labels));
}

inline void write_predictions_csv(const std::string& path, const std::vector<std::string>& ids,
                                  const std::vector<double>& scores) {
    std::ostringstream out;
    out << "patient_id,score\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
        out << csv_escape(ids[i]) << "," << format_double(scores[i]) << "\n";
    atomic_write_text(path, out.str());
}

// (patient_id, value) two-column files; used for predictions and labels.
inline std::vector<std::pair<std::string, double>> read_id_value_csv(const std::string& path,
                                                                     const std::string& column) {
    const auto rows = parse_csv(read_text(path), path);
    if (rows.empty()) throw DataError(path + ": empty file");
    if (rows[0].size() < 2 || rows[0][0] != "patient_id" || rows[0][1] != column)
        throw DataError(path + ": expected header 'patient_id," + column + "'");
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() < 2)
            throw DataError(path + ": row " + std::to_string(r + 1) + ": too few fields");
        out.emplace_back(rows[r][0],
                         parse_number(rows[r][1], path + ": row " + std::to_string(r + 1)));
    }
    return out;
}

inline void write_labels_csv(const std::string& path, const std::vector<std::string>& ids,
                             const std::vector<int>& labels) {
    std::ostringstream out;
    out << "patient_id,label\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
        out << csv_escape(ids[i]) << "," << labels[i] << "\n";
    atomic_write_text(path, out.str());
}

// ---------------------------------------------------------------------------
// model + selection report JSON

inline constexpr const char* kModelFormatTag = "pddwi.gbt/1";
inline constexpr const char* kSelectionFormatTag = "pddwi.selection/1";

inline json model_to_json(const GBTEnsemble& model) {
    json trees = json::array();
    for (const auto& t : model.trees) {
        json node_arrays{{"feature", json::array()}, {"threshold", json::array()},
                         {"left", json::array()},    {"right", json::array()},
                         {"weight", json::array()}};
        for (const auto& n : t.nodes) {
            node_arrays["feature"].push_back(n.feature);
            node_arrays["threshold"].push_back(n.threshold);
            node_arrays["left"].push_back(n.left);
            node_arrays["right"].push_back(n.right);
            node_arrays["weight"].push_back(n.weight);
        }
        trees.push_back(std::move(node_arrays));
    }
    const auto& c = model.config;
    return json{{"format", kModelFormatTag},
                {"base_score", model.base_score},
                {"schema", model.schema},
                {"config",
                 {{"n_rounds", c.n_rounds},
                  {"learning_rate", c.learning_rate},
                  {"max_depth", c.max_depth},
                  {"min_child_weight", c.min_child_weight},
                  {"subsample", c.subsample},
                  {"l2_lambda", c.l2_lambda},
                  {"scale_pos_weight", c.scale_pos_weight},
                  {"seed", c.seed}}},
                {"trees", std::move(trees)}};
}

inline GBTEnsemble model_from_json(const json& j, const std::string& origin) {
    if (!j.is_object() || j.value("format", "") != std::string(kModelFormatTag))
        throw DataError(origin + ": not a " + kModelFormatTag + " model file");

    GBTEnsemble model;
    model.base_score = j.at("base_score").get<double>();
    model.schema = j.at("schema").get<std::vector<std::string>>();
    const auto& c = j.at("config");
    model.config.n_rounds = c.at("n_rounds").get<int>();
    model.config.learning_rate = c.at("learning_rate").get<double>();
    model.config.max_depth = c.at("max_depth").get<int>();
    model.config.min_child_weight = c.at("min_child_weight").get<double>();
    model.config.subsample = c.at("subsample").get<double>();
    model.config.l2_lambda = c.at("l2_lambda").get<double>();
    model.config.scale_pos_weight = c.at("scale_pos_weight").get<double>();
    model.config.seed = c.at("seed").get<std::uint64_t>();

    for (const auto& tj : j.at("trees")) {
        Tree t;
        const auto& feature = tj.at("feature");
        const std::size_t n = feature.size();
        for (std::size_t i = 0; i < n; ++i) {
            TreeNode node;
            node.feature = tj.at("feature")[i].get<int>();
            node.threshold = tj.at("threshold")[i].get<double>();
            node.left = tj.at("left")[i].get<int>();
            node.right = tj.at("right")[i].get<int>();
            node.weight = tj.at("weight")[i].get<double>();
            t.nodes.push_back(node);
        }
        if (t.nodes.empty()) throw DataError(origin + ": empty tree");
        model.trees.push_back(std::move(t));
    }
    model.validate();
    return model;
}

inline void save_model(const std::string& path, const GBTEnsemble& model) {
    atomic_write_text(path, model_to_json(model).dump(2) + "\n");
}

inline GBTEnsemble load_model(const std::string& path) {
    return model_from_json(json::parse(read_text(path)), path);
}

// Infinite ANOVA scores (perfect separators) serialize as the string "inf";
// JSON has no literal for them.
inline json selection_to_json(const SelectionReport& report) {
    json scores = json::array();
    for (const auto& [name, f] : report.scores) {
        json entry{{"name", name}};
        if (std::isinf(f))
            entry["f"] = "inf";
        else
            entry["f"] = f;
        scores.push_back(std::move(entry));
    }
    return json{{"format", kSelectionFormatTag},
                {"scores", std::move(scores)},
                {"selected", report.selected}};
}

inline SelectionReport selection_from_json(const json& j, const std::string& origin) {
    if (!j.is_object() || j.value("format", "") != std::string(kSelectionFormatTag))
        throw DataError(origin + ": not a " + kSelectionFormatTag + " file");
    SelectionReport report;
    for (const auto& entry : j.at("scores")) {
        const double f = entry.at("f").is_string()
                             ? std::numeric_limits<double>::infinity()
                             : entry.at("f").get<double>();
        report.scores.emplace_back(entry.at("name").get<std::string>(), f);
    }
    report.selected = j.at("selected").get<std::vector<std::string>>();
    return report;
}

inline void save_selection(const std::string& path, const SelectionReport& report) {
    atomic_write_text(path, selection_to_json(report).dump(2) + "\n");
}

inline SelectionReport load_selection(const std::string& path) {
    return selection_from_json(json::parse(read_text(path)), path);
}

inline json metrics_to_json(const MetricsReport& m) {
    return json{{"auc", m.auc}, {"f1", m.f1}, {"kappa", m.kappa}, {"n", m.n},
                {"threshold", m.threshold}};
}

// ---------------------------------------------------------------------------
// cohort manifest

struct TimePointEntry {
    std::vector<std::string> dwi_paths;  // one 4D file, or one 3D file per b-value
    std::vector<double> bvalues;
    std::string mask_path;
    std::map<std::string, std::string> extra_map_paths;  // e.g. SER
};

struct ManifestPatient {
    std::string id;
    std::optional<int> label;
    std::map<TimePoint, TimePointEntry> timepoints;
};

struct CohortManifest {
    std::string root;  // directory of the manifest file; paths resolve against it
    std::string clinical_csv;
    std::vector<ManifestPatient> patients;

    std::string resolve(const std::string& rel) const {
        const std::filesystem::path p(rel);
        if (p.is_absolute()) return rel;
        return (std::filesystem::path(root) / p).string();
    }
};

inline CohortManifest load_manifest(const std::string& path) {
    const json j = json::parse(read_text(path));
    CohortManifest m;
    m.root = std::filesystem::path(path).parent_path().string();
    if (j.contains("clinical_csv")) m.clinical_csv = j.at("clinical_csv").get<std::string>();

    std::set<std::string> ids;
    for (const auto& pj : j.at("patients")) {
        ManifestPatient p;
        p.id = pj.at("id").get<std::string>();
        if (!ids.insert(p.id).second)
            throw DataError(path + ": duplicate patient id '" + p.id + "'");
        if (pj.contains("label")) p.label = pj.at("label").get<int>();

        for (const auto& [tp_name, tj] : pj.at("timepoints").items()) {
            TimePointEntry e;
            const auto& dwi = tj.at("dwi");
            if (dwi.is_string())
                e.dwi_paths.push_back(dwi.get<std::string>());
            else
                e.dwi_paths = dwi.get<std::vector<std::string>>();
            e.bvalues = tj.at("bvalues").get<std::vector<double>>();
            e.mask_path = tj.at("mask").get<std::string>();
            if (tj.contains("extra_maps"))
                e.extra_map_paths =
                    tj.at("extra_maps").get<std::map<std::string, std::string>>();
            p.timepoints[parse_time_point(tp_name)] = std::move(e);
        }
        m.patients.push_back(std::move(p));
    }

    // Fail fast on dangling references.
    for (const auto& p : m.patients) {
        for (const auto& [tp, e] : p.timepoints) {
            for (const auto& f : e.dwi_paths)
                if (!std::filesystem::exists(m.resolve(f)))
                    throw DataError(path + ": missing DWI file '" + f + "' (patient " + p.id + ")");
            if (!std::filesystem::exists(m.resolve(e.mask_path)))
                throw DataError(path + ": missing mask file '" + e.mask_path + "' (patient " +
                                p.id + ")");
            for (const auto& [name, f] : e.extra_map_paths)
                if (!std::filesystem::exists(m.resolve(f)))
                    throw DataError(path + ": missing extra map '" + f + "' (patient " + p.id +
                                    ")");
        }
    }
    if (!m.clinical_csv.empty() && !std::filesystem::exists(m.resolve(m.clinical_csv)))
        throw DataError(path + ": missing clinical file '" + m.clinical_csv + "'");
    return m;
}

inline DWIStudy load_study(const CohortManifest& m, const ManifestPatient& p, TimePoint tp) {
    const auto it = p.timepoints.find(tp);
    if (it == p.timepoints.end())
        throw DataError("patient '" + p.id + "' has no data for " + to_string(tp));
    const TimePointEntry& e = it->second;

    DWIStudy study;
    study.patient_id = p.id;
    study.time_point = tp;
    study.bvalues = BValueSet(e.bvalues);

    const auto mask_vol = read_nifti(m.resolve(e.mask_path));
    if (mask_vol.shape.size() != 3)
        throw DataError("mask '" + e.mask_path + "' must be 3D");
    const Dims3 dims{mask_vol.shape[2], mask_vol.shape[1], mask_vol.shape[0]};
    study.mask = Mask3(dims);
    for (std::size_t i = 0; i < mask_vol.data.size(); ++i)
        study.mask[i] = mask_vol.data[i] != 0.0 ? 1 : 0;
    study.spacing = mask_vol.spacing;

    const std::size_t nb = e.bvalues.size();
    study.signal = Volume4<double>(nb, dims);

    if (e.dwi_paths.size() == 1) {
        const auto vol = read_nifti(m.resolve(e.dwi_paths[0]));
        if (vol.shape.size() != 4 || vol.shape[3] != nb)
            throw DataError("DWI '" + e.dwi_paths[0] +
                            "': expected a 4D volume with one channel per b-value");
        if (Dims3{vol.shape[2], vol.shape[1], vol.shape[0]} != dims)
            throw DataError("DWI '" + e.dwi_paths[0] + "': spatial dims differ from mask");
        study.signal.data() = vol.data;
    } else {
        if (e.dwi_paths.size() != nb)
            throw DataError("patient '" + p.id + "': " + std::to_string(e.dwi_paths.size()) +
                            " DWI files for " + std::to_string(nb) + " b-values");
        for (std::size_t c = 0; c < nb; ++c) {
            const auto vol = read_nifti(m.resolve(e.dwi_paths[c]));
            if (vol.shape.size() != 3 || Dims3{vol.shape[2], vol.shape[1], vol.shape[0]} != dims)
                throw DataError("DWI '" + e.dwi_paths[c] + "': dims differ from mask");
            std::copy(vol.data.begin(), vol.data.end(),
                      study.signal.data().begin() + static_cast<long>(c * dims.count()));
        }
    }
    return study;
}

// Pre-computed extra parameter map (e.g. SER); valid wherever the study
// mask is set and the value is finite.
inline ParameterMap load_extra_map(const CohortManifest& m, const TimePointEntry& e,
                                   const std::string& name, const Mask3& mask) {
    const auto path = e.extra_map_paths.at(name);
    const auto vol = read_nifti(m.resolve(path));
    if (vol.shape.size() != 3 || Dims3{vol.shape[2], vol.shape[1], vol.shape[0]} != mask.dims())
        throw DataError("extra map '" + path + "': dims differ from mask");
    ParameterMap map{name, Volume3<double>(mask.dims()), Mask3(mask.dims()), vol.spacing};
    for (std::size_t i = 0; i < vol.data.size(); ++i) {
        map.data[i] = vol.data[i];
        map.valid[i] = (mask[i] && std::isfinite(vol.data[i])) ? 1 : 0;
    }
    return map;
}

// ---------------------------------------------------------------------------
// run configuration

struct AblationConfig {
    std::string name;
    std::vector<std::string> maps;
};

struct RunConfig {
    std::set<std::string> map_subset{kMapAdc0_100, kMapF};
    std::set<TimePoint> timepoints{TimePoint::T0, TimePoint::T1, TimePoint::T2};
    DiscretizationConfig discretization{};
    TrainConfig train{};
    bool auto_scale_pos_weight = true;
    std::size_t select_k = 100;
    int folds = 5;
    std::uint64_t seed = 0;
    double threshold = kDefaultThreshold;
    std::optional<json> grid;  // hyper-tuning grid; kept raw until expanded
    std::vector<AblationConfig> configurations;
};

inline TrainConfig train_config_from_json(const json& j, TrainConfig base) {
    if (j.contains("n_rounds")) base.n_rounds = j.at("n_rounds").get<int>();
    if (j.contains("learning_rate")) base.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("max_depth")) base.max_depth = j.at("max_depth").get<int>();
    if (j.contains("min_child_weight"))
        base.min_child_weight = j.at("min_child_weight").get<double>();
    if (j.contains("subsample")) base.subsample = j.at("subsample").get<double>();
    if (j.contains("l2_lambda")) base.l2_lambda = j.at("l2_lambda").get<double>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    return base;
}

inline RunConfig run_config_from_json(const json& j, const std::string& origin) {
    RunConfig cfg;
    if (j.contains("map_subset")) {
        cfg.map_subset.clear();
        for (const auto& s : j.at("map_subset")) cfg.map_subset.insert(s.get<std::string>());
    }
    if (j.contains("timepoints")) {
        cfg.timepoints.clear();
        for (const auto& s : j.at("timepoints"))
            cfg.timepoints.insert(parse_time_point(s.get<std::string>()));
    }
    if (j.contains("bin_count"))
        cfg.discretization.bin_count = j.at("bin_count").get<std::size_t>();
    if (j.contains("select_k")) cfg.select_k = j.at("select_k").get<std::size_t>();
    if (j.contains("folds")) cfg.folds = j.at("folds").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threshold")) cfg.threshold = j.at("threshold").get<double>();
    if (j.contains("train")) {
        cfg.train = train_config_from_json(j.at("train"), cfg.train);
        if (j.at("train").contains("scale_pos_weight")) {
            cfg.train.scale_pos_weight = j.at("train").at("scale_pos_weight").get<double>();
            cfg.auto_scale_pos_weight = false;
        }
    }
    if (!j.contains("train") || !j.at("train").contains("seed")) cfg.train.seed = cfg.seed;
    if (j.contains("grid")) cfg.grid = j.at("grid");
    if (j.contains("configurations")) {
        for (const auto& c : j.at("configurations")) {
            AblationConfig ac;
            ac.name = c.at("name").get<std::string>();
            ac.maps = c.at("maps").get<std::vector<std::string>>();
            cfg.configurations.push_back(std::move(ac));
        }
    }
    cfg.discretization.validate();
    if (cfg.folds < 2) throw DataError(origin + ": folds must be >= 2");
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    return run_config_from_json(json::parse(read_text(path)), path);
}

// Default hyper-tuning grid; values are configuration, not ground truth.
inline std::vector<CvCandidate> expand_grid(const json& grid, const TrainConfig& base,
                                            std::size_t default_k) {
    const auto mcw = grid.value("min_child_weight", std::vector<double>{1.0, 3.0, 5.0});
    const auto depth = grid.value("max_depth", std::vector<int>{2, 3, 4});
    const auto subsample = grid.value("subsample", std::vector<double>{0.6, 0.8, 1.0});
    const auto ks = grid.value("select_k", std::vector<std::size_t>{default_k});

    std::vector<CvCandidate> out;
    for (auto k : ks)
        for (auto d : depth)
            for (auto w : mcw)
                for (auto s : subsample) {
                    CvCandidate cand;
                    cand.config = base;
                    cand.config.min_child_weight = w;
                    cand.config.max_depth = d;
                    cand.config.subsample = s;
                    cand.select_k = k;
                    out.push_back(cand);
                }
    return out;
}

// ---------------------------------------------------------------------------
// phantom cohort spec JSON

inline CohortSpec cohort_spec_from_json(const json& j, const std::string& origin) {
    CohortSpec spec;
    if (j.contains("n_patients")) spec.n_patients = j.at("n_patients").get<std::size_t>();
    if (j.contains("prevalence")) spec.prevalence = j.at("prevalence").get<double>();
    if (j.contains("dims")) {
        const auto d = j.at("dims").get<std::vector<std::size_t>>();
        if (d.size() != 3) throw DataError(origin + ": dims must have 3 entries (z, y, x)");
        spec.dims = {d[0], d[1], d[2]};
    }
    if (j.contains("spacing")) {
        const auto s = j.at("spacing").get<std::vector<double>>();
        if (s.size() != 3) throw DataError(origin + ": spacing must have 3 entries (dz, dy, dx)");
        spec.spacing = {s[0], s[1], s[2]};
    }
    if (j.contains("bvalues")) spec.bvalues = BValueSet(j.at("bvalues").get<std::vector<double>>());
    if (j.contains("snr")) {
        spec.snr = j.at("snr").get<double>();
        spec.noise = spec.snr > 0.0 ? NoiseModel::rician : NoiseModel::none;
    }
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();

    auto parse_shift = [&](const json& sj, ClassShift base) {
        auto arr = [&](const char* key, std::array<double, 3> cur) {
            if (!sj.contains(key)) return cur;
            const auto v = sj.at(key).get<std::vector<double>>();
            if (v.size() != 3) throw DataError(origin + ": shift arrays need 3 entries (T0,T1,T2)");
            return std::array<double, 3>{v[0], v[1], v[2]};
        };
        base.f_scale = arr("f_scale", base.f_scale);
        base.d_scale = arr("d_scale", base.d_scale);
        base.radius_scale = arr("radius_scale", base.radius_scale);
        return base;
    };
    if (j.contains("responder")) spec.responder = parse_shift(j.at("responder"), spec.responder);
    if (j.contains("non_responder"))
        spec.non_responder = parse_shift(j.at("non_responder"), spec.non_responder);

    spec.validate();
    return spec;
}

inline CohortSpec load_cohort_spec(const std::string& path) {
    return cohort_spec_from_json(json::parse(read_text(path)), path);
}

}  // namespace pddwi
