#pragma once

// Encoding of non-imaging clinical variables. The 4-level hormonal
// receptor status splits into two binary features so tree models can use
// HR and HER2 independently; tumor grade becomes an ordinal 1/2/3 with
// most-frequent imputation; race and lesion type are one-hot encoded over
// vocabularies learned at fit time.

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "pddwi/core.hpp"
#include "pddwi/feature_vector.hpp"

namespace pddwi {

enum class TumorGrade : int { Low = 1, Intermediate = 2, High = 3 };

inline std::string to_string(TumorGrade g) {
    switch (g) {
        case TumorGrade::Low: return "Low";
        case TumorGrade::Intermediate: return "Intermediate";
        case TumorGrade::High: return "High";
    }
    throw std::invalid_argument("unknown tumor grade");
}

inline TumorGrade parse_grade(const std::string& s) {
    if (s == "Low") return TumorGrade::Low;
    if (s == "Intermediate") return TumorGrade::Intermediate;
    if (s == "High") return TumorGrade::High;
    throw DataError("unknown tumor grade '" + s + "'");
}

inline const std::vector<std::string>& hr_her2_vocabulary() {
    static const std::vector<std::string> vocab{"HR+/HER2+", "HR+/HER2-", "HR-/HER2+",
                                                "HR-/HER2-"};
    return vocab;
}

struct ClinicalRecord {
    std::string patient_id;
    double age = 0.0;           // years
    std::string race;           // categorical, vocabulary learned from data
    std::string lesion_type;    // categorical, vocabulary learned from data
    std::string hr_her2;        // one of hr_her2_vocabulary()
    std::optional<TumorGrade> grade;
    double diameter_cm = 0.0;   // MRI-measured longest diameter at T0

    void validate() const {
        const auto& vocab = hr_her2_vocabulary();
        if (std::find(vocab.begin(), vocab.end(), hr_her2) == vocab.end())
            throw DataError("record '" + patient_id + "': unknown HR/HER2 status '" + hr_her2 +
                            "'");
        if (!(diameter_cm > 0.0))
            throw DataError("record '" + patient_id + "': diameter must be > 0");
    }
};

// Fitted on a training set; transform never emits categories outside the
// fitted vocabularies and never looks at other records, so there is no
// leakage at prediction time.
class ClinicalEncoder {
public:
    static ClinicalEncoder fit(const std::vector<ClinicalRecord>& records) {
        if (records.empty()) throw DataError("ClinicalEncoder: empty training set");

        ClinicalEncoder enc;
        std::set<std::string> races, lesions;
        std::map<TumorGrade, std::size_t> grade_counts;
        for (const auto& rec : records) {
            rec.validate();
            races.insert(rec.race);
            lesions.insert(rec.lesion_type);
            if (rec.grade) ++grade_counts[*rec.grade];
        }
        enc.race_vocab_.assign(races.begin(), races.end());
        enc.lesion_vocab_.assign(lesions.begin(), lesions.end());

        // Most-frequent grade; ties break toward the higher ordinal rank.
        enc.modal_grade_ = TumorGrade::High;
        std::size_t best = 0;
        for (TumorGrade g : {TumorGrade::High, TumorGrade::Intermediate, TumorGrade::Low}) {
            const auto it = grade_counts.find(g);
            const std::size_t c = it == grade_counts.end() ? 0 : it->second;
            if (c > best) {
                best = c;
                enc.modal_grade_ = g;
            }
        }
        enc.fitted_ = true;
        return enc;
    }

    // Unseen race/lesion categories produce an all-zeros one-hot block and a
    // warning on the sink; prediction on drifted data must not abort.
    FeatureVector transform(const ClinicalRecord& rec, std::ostream* warnings = nullptr) const {
        if (!fitted_) throw std::logic_error("ClinicalEncoder: transform before fit");
        rec.validate();

        FeatureVector fv;
        fv.push("age", rec.age);
        fv.push("diameter_cm", rec.diameter_cm);
        fv.push("grade", static_cast<double>(static_cast<int>(rec.grade.value_or(modal_grade_))));
        fv.push("her2", rec.hr_her2.find("HER2+") != std::string::npos ? 1.0 : 0.0);
        fv.push("hr", rec.hr_her2.rfind("HR+", 0) == 0 ? 1.0 : 0.0);

        auto one_hot = [&](const std::string& field, const std::vector<std::string>& vocab,
                           const std::string& value) {
            bool seen = false;
            for (const auto& v : vocab) {
                fv.push(field + "=" + v, v == value ? 1.0 : 0.0);
                seen |= (v == value);
            }
            if (!seen && warnings)
                *warnings << "warning: record '" << rec.patient_id << "': unseen " << field
                          << " category '" << value << "', one-hot block left all-zero\n";
        };
        one_hot("lesion_type", lesion_vocab_, rec.lesion_type);
        one_hot("race", race_vocab_, rec.race);
        return fv;
    }

    TumorGrade modal_grade() const { return modal_grade_; }
    const std::vector<std::string>& race_vocabulary() const { return race_vocab_; }
    const std::vector<std::string>& lesion_vocabulary() const { return lesion_vocab_; }

private:
    std::vector<std::string> race_vocab_;
    std::vector<std::string> lesion_vocab_;
    TumorGrade modal_grade_ = TumorGrade::High;
    bool fitted_ = false;
};

}  // namespace pddwi
