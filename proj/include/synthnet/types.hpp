#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace synthnet {

// Sentinel geography id for origins/destinations beyond the synthesis area.
inline const std::string kOutside = "OUTSIDE";

// Worker industry groups. Order is the canonical row/column order wherever
// matrices are indexed by industry.
enum class Industry : int8_t {
    AGR_EXT,
    CON,
    MFG,
    WHL,
    RET,
    TRN_UTL,
    INF,
    FIN,
    PRF,
    EDU,
    MED,
    ENT_art,
    ENT_food,
    SRV,
    ADM_MIL,
};
constexpr int kNumIndustries = 15;

const std::array<std::string, kNumIndustries>& industry_names();
std::optional<Industry> industry_from_string(const std::string& s);

// School grade levels: 0 = pre-K, 1 = kindergarten, 2..13 = grades 1-12.
// kNoGrade marks a person not enrolled.
constexpr int kNoGrade = -1;
constexpr int kMinGrade = 0;
constexpr int kMaxGrade = 13;

struct PersonAttrs {
    int age = 0;
    char sex = 'F';            // 'M' or 'F'
    std::string race;          // categorical code, carried through unanalyzed
    int8_t industry = -1;      // Industry value, or -1 if not employed
    int64_t income = 0;        // household annual income, dollars
    int grade = kNoGrade;      // enrollment grade level
    bool is_worker = false;

    bool employed() const { return industry >= 0; }
};

// One census-target vector: e (census side) or o (synthetic side).
using TargetVector = std::vector<double>;

struct MicroHousehold {
    std::string id;
    std::string puma;
    std::vector<PersonAttrs> members;
    TargetVector contribution;  // per-column household-level sums, schema order
};

struct OdRow {
    std::string home_cbg;
    std::string work_cbg;  // may be OUTSIDE
    double count = 0.0;
};

struct WacRow {
    std::string work_cbg;  // may be OUTSIDE
    Industry industry{};
    double count = 0.0;
};

struct CbpBin {
    std::string county;
    double bin_min = 1.0;
    double bin_max = -1.0;  // -1 = open (right-censored) top bin
    double count = 0.0;
};

struct School {
    std::string id;
    double x = 0.0, y = 0.0;
    int low_grade = kMinGrade;
    int high_grade = kMaxGrade;
    double n_students = -1.0;  // -1 = missing, filled during ingest
    double n_teachers = -1.0;
    bool active = true;
    bool regular = true;
};

struct GeoRow {
    std::string cbg;
    double centroid_x = 0.0, centroid_y = 0.0;
    std::string puma;
    std::string county;
    std::string cbsa;       // may be empty
    double urban_pct = 0.0; // 0..100
};

// GQ age bands and residence types. Military residents exist only in the
// 18-64 band.
enum class GqBand : int { Under18 = 0, Age18to64 = 1, Age65plus = 2 };
enum class GqType : int { Institutional = 0, CivilianNoninst = 1, Military = 2 };

const std::array<std::string, 3>& gq_band_names();
const std::array<std::string, 3>& gq_type_names();

struct GqCounts {
    // counts[band][type]
    std::array<std::array<int64_t, 3>, 3> counts{};

    int64_t total() const {
        int64_t t = 0;
        for (const auto& band : counts)
            for (int64_t c : band) t += c;
        return t;
    }
    int64_t band_total(GqBand b) const {
        int64_t t = 0;
        for (int64_t c : counts[static_cast<int>(b)]) t += c;
        return t;
    }
    int64_t& at(GqBand b, GqType t) { return counts[static_cast<int>(b)][static_cast<int>(t)]; }
    int64_t at(GqBand b, GqType t) const {
        return counts[static_cast<int>(b)][static_cast<int>(t)];
    }
};

struct LognormalParams {
    double mu = 0.0;
    double sigma = 1.0;  // natural-log scale, > 0
};

// Tract grouping is encoded in CBG ids: a CBG id is its tract id plus one
// trailing block-group character.
inline std::string tract_of(const std::string& cbg) {
    return cbg.size() > 1 ? cbg.substr(0, cbg.size() - 1) : cbg;
}

}  // namespace synthnet
