#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "synthnet/csv.hpp"
#include "synthnet/schema.hpp"
#include "synthnet/types.hpp"

namespace synthnet {

// Parsed and validated region input files. See docs/SCHEMAS.md for the file
// contracts.
struct RegionInputs {
    csv::Table cbg_marginals;
    std::unordered_map<std::string, std::size_t> cbg_row;  // cbg id -> marginals row

    std::vector<MicroHousehold> pums;
    std::map<std::string, std::vector<uint32_t>> pums_by_puma;  // puma -> indices into pums

    std::map<std::string, std::vector<OdRow>> od_by_origin;      // home cbg -> rows
    std::map<std::string, std::array<double, kNumIndustries>> wac;  // work cbg -> counts
    std::map<std::string, std::vector<CbpBin>> cbp_by_county;

    std::vector<School> schools;  // missing counts already mean-filled
    std::map<std::string, GeoRow> geo;

    std::vector<std::string> cbg_ids;  // marginal-table order

    double marginal(const std::string& cbg, const std::string& column) const;
    const GeoRow& geo_of(const std::string& cbg) const;
};

RegionInputs load_region_inputs(const std::filesystem::path& input_dir);

// Census-side target vector e for one marginal-table row.
TargetVector derive_targets(const csv::Table& cbg_table, std::size_t row,
                            const TargetSchema& schema);

// Fills MicroHousehold::contribution for every pool household.
void compute_contributions(std::vector<MicroHousehold>& pums, const TargetSchema& schema);

// Per-band GQ type proportions (band x type), normalized rows.
using P43Props = std::array<std::array<double, 3>, 3>;

// County-level P43 proportions aggregated over the county's CBGs.
std::map<std::string, P43Props> county_p43_props(const RegionInputs& region);

GqCounts derive_gq_counts(const csv::Table& cbg_table, std::size_t row, const P43Props& props);

// CBGs kept for synthesis: >= 20 households or >= 20 GQ residents, and a
// non-empty PUMA mapping. Sorted by id.
std::vector<std::string> filter_cbgs(const RegionInputs& region);

// Binned maximum-likelihood fit of a lognormal employer-size distribution.
// An open top bin (bin_max < 0) is treated as right-censored.
LognormalParams fit_employer_sizes(const std::vector<CbpBin>& bins);

// Up to five nearest active regular schools offering `grade`, ascending by
// Euclidean distance from the CBG centroid, ties by school id.
std::vector<uint32_t> nearest_schools(const std::string& cbg, int grade,
                                      const std::vector<School>& schools,
                                      const std::map<std::string, GeoRow>& geo);

// rankings[cbg][grade] = ranked school indices
struct SchoolRankings {
    std::map<std::string, std::array<std::vector<uint32_t>, kMaxGrade + 1>> by_cbg;
};

SchoolRankings rank_schools(const RegionInputs& region, const std::vector<std::string>& cbgs);

// Marginal-table raw columns with reserved meanings.
inline const std::string kColHouseholdsTotal = "households_total";
inline const std::string kColAdultsTotal = "pop_adults_total";
inline const std::string kColAdultsHousehold = "pop_adults_household";
inline const std::string kColGqTotal = "gq_pop_total";
inline const std::string kColGq65plus = "gq_pop_65plus";

const std::array<std::string, 7>& p43_column_names();  // band x type, military only 18-64

}  // namespace synthnet
