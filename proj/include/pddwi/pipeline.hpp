#pragma once

// End-to-end composition: decompose every study, extract radiomics per
// (time point, map), encode clinical data, assemble feature matrices, run
// cross-validated training and the map-subset ablation harness.

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pddwi/clinical.hpp"
#include "pddwi/core.hpp"
#include "pddwi/decompose.hpp"
#include "pddwi/features.hpp"
#include "pddwi/gbt.hpp"
#include "pddwi/io.hpp"
#include "pddwi/metrics.hpp"
#include "pddwi/phantom.hpp"
#include "pddwi/radiomics.hpp"

namespace pddwi {

inline bool is_derived_map(const std::string& name) {
    return name == kMapAdc0_100 || name == kMapAdc100_800 || name == kMapAdc0_800 ||
           name == kMapF;
}

// Radiomics for the requested maps of one study. Derived maps come from
// the decomposition; anything else must be provided via extra_maps.
inline std::map<std::string, FeatureVector> study_radiomics(
    const DWIStudy& study, const std::set<std::string>& map_names,
    const DiscretizationConfig& cfg,
    const std::map<std::string, ParameterMap>* extra_maps = nullptr) {
    std::map<std::string, ParameterMap> derived;
    for (const auto& name : map_names) {
        if (is_derived_map(name)) {
            derived = decompose_study(study);
            break;
        }
    }

    std::map<std::string, FeatureVector> out;
    for (const auto& name : map_names) {
        const ParameterMap* map = nullptr;
        if (is_derived_map(name)) {
            map = &derived.at(name);
        } else if (extra_maps && extra_maps->count(name)) {
            map = &extra_maps->at(name);
        } else {
            throw DataError("study '" + study.patient_id + "' " + to_string(study.time_point) +
                            ": no source for map '" + name + "'");
        }
        out.emplace(name, extract_all(*map, study.mask, cfg));
    }
    return out;
}

// In-memory phantom cohort -> per-patient features for the given maps.
inline std::vector<PatientFeatures> cohort_features(const std::vector<CohortPatient>& cohort,
                                                    const std::set<std::string>& map_names,
                                                    const DiscretizationConfig& cfg) {
    std::vector<ClinicalRecord> records;
    records.reserve(cohort.size());
    for (const auto& p : cohort) records.push_back(p.clinical);
    const auto encoder = ClinicalEncoder::fit(records);

    std::vector<PatientFeatures> out;
    out.reserve(cohort.size());
    for (const auto& p : cohort) {
        PatientFeatures pf;
        pf.id = p.id;
        pf.label = p.label;
        pf.clinical = encoder.transform(p.clinical);
        for (const auto& study : p.studies)
            pf.radiomic[study.time_point] = study_radiomics(study, map_names, cfg);
        out.push_back(std::move(pf));
    }
    return out;
}

// Manifest-backed cohort -> per-patient features. Clinical records are
// matched by patient id; the encoder is fitted on this cohort's records.
inline std::vector<PatientFeatures> cohort_features_from_manifest(
    const CohortManifest& manifest, const std::set<std::string>& map_names,
    const std::set<TimePoint>& timepoints, const DiscretizationConfig& cfg,
    std::ostream* warnings = nullptr) {
    if (manifest.clinical_csv.empty())
        throw DataError("manifest has no clinical_csv; clinical features are required");
    const auto records = read_clinical_csv(manifest.resolve(manifest.clinical_csv));
    std::map<std::string, const ClinicalRecord*> by_id;
    for (const auto& r : records) by_id[r.patient_id] = &r;
    const auto encoder = ClinicalEncoder::fit(records);

    std::vector<PatientFeatures> out;
    for (const auto& p : manifest.patients) {
        const auto rec = by_id.find(p.id);
        if (rec == by_id.end())
            throw DataError("patient '" + p.id + "' has no clinical record");

        PatientFeatures pf;
        pf.id = p.id;
        pf.label = p.label;
        pf.clinical = encoder.transform(*rec->second, warnings);

        for (TimePoint tp : kAllTimePoints) {
            if (!timepoints.count(tp)) continue;
            const auto study = load_study(manifest, p, tp);
            std::map<std::string, ParameterMap> extra;
            const auto& entry = p.timepoints.at(tp);
            for (const auto& name : map_names)
                if (!is_derived_map(name) && entry.extra_map_paths.count(name))
                    extra.emplace(name, load_extra_map(manifest, entry, name, study.mask));
            pf.radiomic[tp] = study_radiomics(study, map_names, cfg, &extra);
        }
        out.push_back(std::move(pf));
    }
    return out;
}

// Out-of-fold validation scores: for each stratified fold, feature
// selection and training run on the remaining rows only, then the held-out
// rows are scored. Returned scores align with the rows of X.
inline std::vector<double> out_of_fold_scores(const FeatureMatrix& X, const TrainConfig& cfg,
                                              std::size_t select_k, int folds, std::uint64_t seed,
                                              bool auto_scale_pos_weight = true) {
    const auto fold_sets = stratified_folds(X.labels(), folds, seed);
    std::vector<double> scores(X.n_rows(), 0.0);
    for (std::size_t f = 0; f < fold_sets.size(); ++f) {
        std::vector<std::size_t> train_rows;
        for (std::size_t g = 0; g < fold_sets.size(); ++g)
            if (g != f)
                train_rows.insert(train_rows.end(), fold_sets[g].begin(), fold_sets[g].end());

        const FeatureMatrix Xtr = X.rows(train_rows);
        const auto report = select_top_k(Xtr, select_k);
        TrainConfig fold_cfg = cfg;
        if (auto_scale_pos_weight)
            fold_cfg.scale_pos_weight = compute_scale_pos_weight(Xtr.labels());
        const auto model = train(Xtr.select_columns(report.selected), fold_cfg);

        const auto val = X.rows(fold_sets[f]).select_columns(report.selected);
        const auto fold_scores = predict_proba(model, val);
        for (std::size_t i = 0; i < fold_sets[f].size(); ++i)
            scores[fold_sets[f][i]] = fold_scores[i];
    }
    return scores;
}

struct AblationRow {
    std::string config;
    std::string timepoints;  // e.g. "T0+T1"
    MetricsReport metrics;
};

inline const std::vector<std::set<TimePoint>>& ablation_timepoint_subsets() {
    static const std::vector<std::set<TimePoint>> subsets{
        {TimePoint::T0},
        {TimePoint::T0, TimePoint::T1},
        {TimePoint::T0, TimePoint::T1, TimePoint::T2}};
    return subsets;
}

inline std::string timepoints_label(const std::set<TimePoint>& tps) {
    std::string s;
    for (TimePoint tp : kAllTimePoints) {
        if (!tps.count(tp)) continue;
        if (!s.empty()) s += "+";
        s += to_string(tp);
    }
    return s;
}

// Default map-subset configurations mirroring the model comparison: the
// aggregate-map baselines, the single-cue models and the decomposed model.
// The SER-augmented baseline is included only when SER data exists.
inline std::vector<AblationConfig> default_ablation_configs(bool have_ser) {
    std::vector<AblationConfig> configs;
    if (have_ser) configs.push_back({"baseline", {kMapAdc0_800, "SER"}});
    configs.push_back({"adc_0_100_only", {kMapAdc0_100}});
    configs.push_back({"adc_100_800_only", {kMapAdc100_800}});
    configs.push_back({"adc_0_800_only", {kMapAdc0_800}});
    configs.push_back({"f_only", {kMapF}});
    configs.push_back({"pd_dwi", {kMapAdc0_100, kMapF}});
    return configs;
}

// Per (configuration, time-point prefix) out-of-fold metrics over a
// labeled cohort. Patient features must already contain every map any
// configuration requests.
inline std::vector<AblationRow> ablation_report(const std::vector<PatientFeatures>& patients,
                                                const std::vector<AblationConfig>& configs,
                                                const RunConfig& cfg) {
    std::vector<AblationRow> rows;
    for (const auto& config : configs) {
        const std::set<std::string> maps(config.maps.begin(), config.maps.end());
        for (const auto& tps : ablation_timepoint_subsets()) {
            const FeatureMatrix X = assemble(patients, maps, tps);
            if (!X.has_labels())
                throw DataError("ablation requires labels for every patient");
            const auto scores =
                out_of_fold_scores(X, cfg.train, cfg.select_k, cfg.folds, cfg.seed);
            AblationRow row;
            row.config = config.name;
            row.timepoints = timepoints_label(tps);
            row.metrics = evaluate_scores(scores, X.labels(), cfg.threshold);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream out;
    out << "config,timepoints,auc,f1,kappa,n\n";
    for (const auto& r : rows) {
        out << r.config << "," << r.timepoints << "," << format_double(r.metrics.auc) << ","
            << format_double(r.metrics.f1) << "," << format_double(r.metrics.kappa) << ","
            << r.metrics.n << "\n";
    }
    return out.str();
}

inline json ablation_json(const std::vector<AblationRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows) {
        json entry = metrics_to_json(r.metrics);
        entry["config"] = r.config;
        entry["timepoints"] = r.timepoints;
        arr.push_back(std::move(entry));
    }
    return arr;
}

// ---------------------------------------------------------------------------
// ROI decay plot

// Log-domain signal decay of the ROI-averaged signal with the three fitted
// ADC lines and the F estimate, rendered as a standalone SVG.
inline std::string render_decay_svg(const DWIStudy& study) {
    require_valid_study(study);

    const std::size_t voxels = study.mask.size();
    std::vector<double> roi_mean(study.bvalues.size(), 0.0);
    std::size_t count = 0;
    for (std::size_t v = 0; v < voxels; ++v) {
        if (!study.mask[v]) continue;
        ++count;
        for (std::size_t c = 0; c < study.bvalues.size(); ++c)
            roi_mean[c] += study.signal[c * voxels + v];
    }
    for (auto& s : roi_mean) s /= static_cast<double>(count);

    std::vector<std::pair<double, double>> pts;
    for (std::size_t c = 0; c < study.bvalues.size(); ++c)
        pts.emplace_back(study.bvalues[c], roi_mean[c]);

    auto subset_fit = [&](const std::vector<std::size_t>& idx) {
        std::vector<std::pair<double, double>> sub;
        for (auto c : idx) sub.push_back(pts[c]);
        return fit_monoexp(sub);
    };
    const auto fit_low = subset_fit(study.bvalues.indices_leq(kLowBCutoff));
    const auto fit_high = subset_fit(study.bvalues.indices_geq(kLowBCutoff));
    const auto fit_all = subset_fit(study.bvalues.indices_geq(0.0));
    if (!fit_low || !fit_high || !fit_all)
        throw NumericError("decay plot: ROI-averaged signal is non-positive");

    const double s0 = pts.front().second;
    const double f_est = std::clamp((s0 - std::exp(fit_high->log_s0)) / s0, 0.0, 1.0);

    const double W = 640, H = 480, ml = 70, mr = 200, mt = 40, mb = 60;
    const double b_max = study.bvalues.values().back();
    double y_lo = std::log(pts.front().second), y_hi = y_lo;
    for (const auto& [b, s] : pts) {
        y_lo = std::min(y_lo, std::log(s));
        y_hi = std::max(y_hi, std::log(s));
    }
    const double pad = 0.15 * (y_hi - y_lo + 1e-9);
    y_lo -= pad;
    y_hi += pad;

    auto px = [&](double b) { return ml + (W - ml - mr) * (b / b_max); };
    auto py = [&](double logs) { return mt + (H - mt - mb) * (1.0 - (logs - y_lo) / (y_hi - y_lo)); };

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    svg << "<rect width='100%' height='100%' fill='white'/>\n";
    svg << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
        << "' stroke='black'/>\n";
    svg << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
        << "' stroke='black'/>\n";
    svg << "<text x='" << (ml + W - mr) / 2 << "' y='" << H - 15
        << "' text-anchor='middle' font-size='14'>b (s/mm^2)</text>\n";
    svg << "<text x='18' y='" << (mt + H - mb) / 2
        << "' text-anchor='middle' font-size='14' transform='rotate(-90 18 "
        << (mt + H - mb) / 2 << ")'>ln signal</text>\n";
    svg << "<text x='" << (ml + W - mr) / 2 << "' y='24' text-anchor='middle' font-size='15'>"
        << study.patient_id << " " << to_string(study.time_point)
        << " ROI-averaged DWI decay</text>\n";

    for (double b : study.bvalues.values()) {
        svg << "<line x1='" << px(b) << "' y1='" << H - mb << "' x2='" << px(b) << "' y2='"
            << H - mb + 5 << "' stroke='black'/>\n";
        svg << "<text x='" << px(b) << "' y='" << H - mb + 20
            << "' text-anchor='middle' font-size='12'>" << b << "</text>\n";
    }

    struct Line {
        const MonoExpFit& fit;
        double b_from, b_to;
        const char* color;
        std::string label;
    };
    char buf[96];
    std::vector<Line> lines;
    std::snprintf(buf, sizeof(buf), "ADC_0_100 = %.3e", fit_low->adc);
    lines.push_back({*fit_low, 0.0, kLowBCutoff, "#c03030", buf});
    std::snprintf(buf, sizeof(buf), "ADC_100_800 = %.3e", fit_high->adc);
    lines.push_back({*fit_high, kLowBCutoff, b_max, "#3060c0", buf});
    std::snprintf(buf, sizeof(buf), "ADC_0_800 = %.3e", fit_all->adc);
    lines.push_back({*fit_all, 0.0, b_max, "#30a050", buf});

    for (const auto& line : lines) {
        const double y1 = line.fit.log_s0 - line.fit.adc * line.b_from;
        const double y2 = line.fit.log_s0 - line.fit.adc * line.b_to;
        svg << "<line x1='" << px(line.b_from) << "' y1='" << py(y1) << "' x2='" << px(line.b_to)
            << "' y2='" << py(y2) << "' stroke='" << line.color
            << "' stroke-width='1.5' stroke-dasharray='6 3'/>\n";
    }

    for (const auto& [b, s] : pts) {
        svg << "<circle cx='" << px(b) << "' cy='" << py(std::log(s))
            << "' r='4' fill='black'/>\n";
    }

    double ly = mt + 10;
    for (const auto& line : lines) {
        svg << "<line x1='" << W - mr + 10 << "' y1='" << ly << "' x2='" << W - mr + 40 << "' y2='"
            << ly << "' stroke='" << line.color << "' stroke-width='1.5'/>\n";
        svg << "<text x='" << W - mr + 46 << "' y='" << ly + 4 << "' font-size='12'>"
            << line.label << "</text>\n";
        ly += 22;
    }
    std::snprintf(buf, sizeof(buf), "F = %.3f", f_est);
    svg << "<text x='" << W - mr + 46 << "' y='" << ly + 4 << "' font-size='12'>" << buf
        << "</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace pddwi
