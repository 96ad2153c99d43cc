#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "synthnet/cosearch.hpp"
#include "synthnet/ingest.hpp"
#include "synthnet/ipf.hpp"
#include "synthnet/rng.hpp"
#include "synthnet/types.hpp"

namespace synthnet {

struct Person {
    int64_t id = -1;
    std::string home_cbg;       // OUTSIDE for placeholder workers
    int64_t household_id = -1;  // index into Population::households, -1 if none
    int32_t gq_place = -1;      // index into Population::places, -1 if none
    bool placeholder = false;
    PersonAttrs attrs;
    int32_t school_place = -1;
    int32_t work_place = -1;
    std::string work_cbg;  // empty until commute assignment; may be OUTSIDE
};

struct Place {
    enum class Kind : uint8_t { School, Workplace, Gq };
    std::string id;
    Kind kind = Kind::Workplace;
    std::string cbg;

    // schools
    double capacity = 0.0;
    int low_grade = kMinGrade, high_grade = kMaxGrade;
    double n_teachers = 0.0;

    // workplaces
    int8_t industry = -1;
    int64_t drawn_size = 0;

    // group quarters
    GqBand gq_band = GqBand::Age18to64;
    GqType gq_type = GqType::Institutional;

    std::vector<int64_t> members;  // students / workers / residents
    std::vector<int64_t> staff;    // teachers / GQ staff
};

struct Population {
    std::vector<Person> persons;                      // person id = index
    std::vector<std::vector<int64_t>> households;     // household id = index
    std::vector<std::string> household_cbg;           // parallel to households
    std::vector<Place> places;
    std::unordered_map<std::string, int32_t> place_by_id;

    int32_t add_place(Place p);
};

struct PlacementReport {
    int64_t unassigned_students = 0;
    int64_t teacher_deficit = 0;
    int64_t gq_staff_deficit = 0;
    int64_t commute_deficit = 0;
    int64_t overfilled_schools = 0;
    int64_t placeholders_created = 0;
};

// Creates one place per schools.csv row, in file order, so that place index
// equals school index. Must run before any other place is registered.
void register_schools(Population& pop, const RegionInputs& region);

// Clones selected PUMS households into concrete persons and instantiates one
// GQ per (band, type) with >= 20 residents. Civilian and military GQ worker
// industries follow the fitted industry-by-residence rows.
void instantiate_population(Population& pop, const RegionInputs& region,
                            const std::map<std::string, AnnealOutcome>& selections,
                            const std::map<std::string, GqCounts>& gq_counts,
                            const std::map<std::string, IpfResult>& residence_fits,
                            uint64_t master_seed);

void assign_students(Population& pop, const SchoolRankings& rankings, uint64_t master_seed,
                     PlacementReport& report);

void assign_commutes(Population& pop, const std::map<std::string, CommuteMatrix>& commutes,
                     uint64_t master_seed, PlacementReport& report);

void generate_workplaces(Population& pop,
                         const std::map<std::string, LognormalParams>& county_params,
                         const RegionInputs& region, uint64_t master_seed,
                         PlacementReport& report);

void assign_teachers(Population& pop, const RegionInputs& region,
                     const std::vector<std::string>& populated_cbgs, uint64_t master_seed,
                     PlacementReport& report);

void assign_gq_staff(Population& pop, const RegionInputs& region,
                     const std::vector<std::string>& populated_cbgs, uint64_t master_seed,
                     PlacementReport& report);

// GQ staffing ratios (institutional 0.1, otherwise 0.02, rounded half-up).
int64_t gq_staff_count(GqType type, int64_t residents);

}  // namespace synthnet
