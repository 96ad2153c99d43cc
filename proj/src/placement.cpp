#include "synthnet/placement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "synthnet/util.hpp"

namespace synthnet {

namespace {

std::string gq_place_id(const std::string& cbg, GqBand band, GqType type) {
    return "Q:" + cbg + ":" + gq_band_names()[static_cast<std::size_t>(band)] + ":" +
           gq_type_names()[static_cast<std::size_t>(type)];
}

int age_for_band(GqBand band, RngStream& rng) {
    switch (band) {
        case GqBand::Under18: return static_cast<int>(rng.uniform_int(0, 17));
        case GqBand::Age18to64: return static_cast<int>(rng.uniform_int(18, 64));
        case GqBand::Age65plus: return static_cast<int>(rng.uniform_int(65, 94));
    }
    return 0;
}

// Integerize one fitted matrix row and hand industries to residents in
// shuffled order.
void assign_gq_industries(Population& pop, std::vector<int64_t>& residents,
                          const Matrix& fitted, std::size_t fitted_row, RngStream& rng) {
    std::vector<double> row(kNumIndustries);
    for (std::size_t i = 0; i < kNumIndustries; ++i) row[i] = fitted.at(fitted_row, i);
    auto counts = largest_remainder(static_cast<int64_t>(residents.size()), row);
    rng.shuffle(residents);
    std::size_t cursor = 0;
    for (std::size_t ind = 0; ind < kNumIndustries; ++ind) {
        for (int64_t k = 0; k < counts[ind] && cursor < residents.size(); ++k, ++cursor) {
            Person& p = pop.persons[static_cast<std::size_t>(residents[cursor])];
            p.attrs.industry = static_cast<int8_t>(ind);
            p.attrs.is_worker = true;
        }
    }
}

struct TierDraw {
    std::vector<int64_t> drawn;
    int64_t deficit = 0;
};

// Draw up to `needed` distinct persons from tiered candidate lists, exhausting
// each tier before falling back to the next.
TierDraw draw_tiered(const std::vector<std::vector<int64_t>>& tiers, int64_t needed,
                     RngStream& rng) {
    TierDraw out;
    for (const auto& tier : tiers) {
        if (static_cast<int64_t>(out.drawn.size()) >= needed) break;
        std::vector<int64_t> pool = tier;
        rng.shuffle(pool);
        for (int64_t id : pool) {
            if (static_cast<int64_t>(out.drawn.size()) >= needed) break;
            out.drawn.push_back(id);
        }
    }
    out.deficit = needed - static_cast<int64_t>(out.drawn.size());
    return out;
}

void reassign_workplace(Population& pop, int64_t person_id, int32_t new_place) {
    Person& p = pop.persons[static_cast<std::size_t>(person_id)];
    if (p.work_place >= 0) {
        auto& members = pop.places[static_cast<std::size_t>(p.work_place)].members;
        members.erase(std::remove(members.begin(), members.end(), person_id), members.end());
    }
    p.work_place = new_place;
    pop.places[static_cast<std::size_t>(new_place)].staff.push_back(person_id);
}

}  // namespace

int32_t Population::add_place(Place p) {
    int32_t idx = static_cast<int32_t>(places.size());
    place_by_id[p.id] = idx;
    places.push_back(std::move(p));
    return idx;
}

int64_t gq_staff_count(GqType type, int64_t residents) {
    double ratio = type == GqType::Institutional ? 0.1 : 0.02;
    return std::max<int64_t>(0, round_half_up(ratio * static_cast<double>(residents)));
}

void register_schools(Population& pop, const RegionInputs& region) {
    if (!pop.places.empty()) {
        throw ValidationError("register_schools must run before other places are created");
    }
    for (const School& s : region.schools) {
        Place place;
        place.id = "S:" + s.id;
        place.kind = Place::Kind::School;
        place.capacity = s.n_students;
        place.low_grade = s.low_grade;
        place.high_grade = s.high_grade;
        place.n_teachers = s.n_teachers;
        pop.add_place(std::move(place));
    }
}

void instantiate_population(Population& pop, const RegionInputs& region,
                            const std::map<std::string, AnnealOutcome>& selections,
                            const std::map<std::string, GqCounts>& gq_counts,
                            const std::map<std::string, IpfResult>& residence_fits,
                            uint64_t master_seed) {
    // Households first, in CBG order; GQ residents afterwards so person ids
    // stay stable with respect to the selection outcome.
    for (const auto& [cbg, outcome] : selections) {
        for (uint32_t hh_index : outcome.selection) {
            const MicroHousehold& micro = region.pums[hh_index];
            int64_t household_id = static_cast<int64_t>(pop.households.size());
            pop.households.emplace_back();
            pop.household_cbg.push_back(cbg);
            for (const PersonAttrs& attrs : micro.members) {
                Person p;
                p.id = static_cast<int64_t>(pop.persons.size());
                p.home_cbg = cbg;
                p.household_id = household_id;
                p.attrs = attrs;
                pop.households.back().push_back(p.id);
                pop.persons.push_back(std::move(p));
            }
        }
    }

    for (const auto& [cbg, counts] : gq_counts) {
        RngStream rng = RngStream::derive(master_seed, "gq", RngStream::hash_str(cbg));
        for (int band = 0; band < 3; ++band) {
            for (int type = 0; type < 3; ++type) {
                int64_t n = counts.counts[band][type];
                if (n < 20) {
                    if (n > 0) {
                        log::info("CBG " + cbg + ": " + std::to_string(n) + " " +
                                  gq_type_names()[static_cast<std::size_t>(type)] + " " +
                                  gq_band_names()[static_cast<std::size_t>(band)] +
                                  " GQ residents below the 20-person threshold; no GQ created");
                    }
                    continue;
                }
                Place gq;
                gq.id = gq_place_id(cbg, static_cast<GqBand>(band), static_cast<GqType>(type));
                gq.kind = Place::Kind::Gq;
                gq.cbg = cbg;
                gq.gq_band = static_cast<GqBand>(band);
                gq.gq_type = static_cast<GqType>(type);
                int32_t place_idx = pop.add_place(std::move(gq));

                std::vector<int64_t> residents;
                for (int64_t k = 0; k < n; ++k) {
                    Person p;
                    p.id = static_cast<int64_t>(pop.persons.size());
                    p.home_cbg = cbg;
                    p.gq_place = place_idx;
                    p.attrs.age = age_for_band(static_cast<GqBand>(band), rng);
                    p.attrs.sex = rng.bernoulli(0.5) ? 'M' : 'F';
                    p.attrs.grade = kNoGrade;  // GQ residents do not attend outside schools
                    residents.push_back(p.id);
                    pop.persons.push_back(std::move(p));
                }
                pop.places[static_cast<std::size_t>(place_idx)].members = residents;

                if (band == static_cast<int>(GqBand::Age18to64) &&
                    type != static_cast<int>(GqType::Institutional)) {
                    auto fit = residence_fits.find(cbg);
                    if (fit != residence_fits.end()) {
                        std::size_t row = type == static_cast<int>(GqType::CivilianNoninst) ? 1 : 2;
                        auto shuffled = residents;
                        assign_gq_industries(pop, shuffled, fit->second.fitted, row, rng);
                    }
                }
            }
        }
    }
}

void assign_students(Population& pop, const SchoolRankings& rankings, uint64_t master_seed,
                     PlacementReport& report) {
    std::vector<int64_t> students;
    for (const Person& p : pop.persons) {
        if (p.attrs.grade != kNoGrade && p.gq_place < 0 && !p.placeholder) {
            students.push_back(p.id);
        }
    }
    RngStream rng = RngStream::derive(master_seed, "students", 0);
    rng.shuffle(students);

    std::vector<int64_t> assigned_count(pop.places.size(), 0);
    std::vector<bool> overfilled(pop.places.size(), false);

    for (int64_t sid : students) {
        Person& student = pop.persons[static_cast<std::size_t>(sid)];
        auto cbg_it = rankings.by_cbg.find(student.home_cbg);
        const std::vector<uint32_t>* ranked = nullptr;
        if (cbg_it != rankings.by_cbg.end()) {
            ranked = &cbg_it->second[static_cast<std::size_t>(student.attrs.grade)];
        }
        if (ranked == nullptr || ranked->empty()) {
            ++report.unassigned_students;
            continue;
        }

        // ranked school ids refer to region school order; schools were
        // registered as places in that same order with id prefix "S:".
        auto place_of = [&](uint32_t school_rank_entry) {
            return static_cast<int32_t>(school_rank_entry);
        };

        int first_open = -1, second_open = -1;
        for (std::size_t k = 0; k < ranked->size(); ++k) {
            int32_t pl = place_of((*ranked)[k]);
            if (static_cast<double>(assigned_count[static_cast<std::size_t>(pl)]) <
                pop.places[static_cast<std::size_t>(pl)].capacity) {
                if (first_open < 0) {
                    first_open = static_cast<int>(k);
                } else {
                    second_open = static_cast<int>(k);
                    break;
                }
            }
        }

        bool take_primary = rng.uniform01() < 0.9;
        int chosen;
        if (first_open >= 0) {
            if (take_primary || second_open < 0) {
                chosen = first_open;
            } else {
                chosen = second_open;
            }
        } else {
            // every ranked school is full: overfill the closest (or second)
            chosen = (take_primary || ranked->size() < 2) ? 0 : 1;
            overfilled[static_cast<std::size_t>(place_of((*ranked)[static_cast<std::size_t>(
                chosen)]))] = true;
        }
        int32_t pl = place_of((*ranked)[static_cast<std::size_t>(chosen)]);
        student.school_place = pl;
        assigned_count[static_cast<std::size_t>(pl)] += 1;
        pop.places[static_cast<std::size_t>(pl)].members.push_back(sid);
    }
    for (bool b : overfilled) report.overfilled_schools += b ? 1 : 0;
}

void assign_commutes(Population& pop, const std::map<std::string, CommuteMatrix>& commutes,
                     uint64_t master_seed, PlacementReport& report) {
    // workers by (home cbg, industry), person-id order
    std::map<std::string, std::array<std::vector<int64_t>, kNumIndustries>> by_origin;
    for (const Person& p : pop.persons) {
        if (!p.attrs.employed() || p.placeholder) continue;
        by_origin[p.home_cbg][static_cast<std::size_t>(p.attrs.industry)].push_back(p.id);
    }

    for (auto& [origin, by_industry] : by_origin) {
        RngStream rng = RngStream::derive(master_seed, "commutes", RngStream::hash_str(origin));
        auto cm_it = commutes.find(origin);
        for (std::size_t ind = 0; ind < kNumIndustries; ++ind) {
            auto& workers = by_industry[ind];
            if (workers.empty()) continue;
            if (cm_it == commutes.end()) {
                for (int64_t id : workers) {
                    pop.persons[static_cast<std::size_t>(id)].work_cbg = kOutside;
                }
                log::warn("no commute matrix for origin " + origin + "; sending " +
                          std::to_string(workers.size()) + " workers OUTSIDE");
                continue;
            }
            const CommuteMatrix& cm = cm_it->second;
            std::vector<double> row(cm.destinations.size());
            double row_total = 0.0;
            for (std::size_t d = 0; d < cm.destinations.size(); ++d) {
                row[d] = cm.cells.at(ind, d);
                row_total += row[d];
            }
            rng.shuffle(workers);
            if (row_total <= 0.0) {
                for (int64_t id : workers) {
                    pop.persons[static_cast<std::size_t>(id)].work_cbg = kOutside;
                }
                log::warn("commute row empty for origin " + origin + " industry " +
                          industry_names()[ind] + "; sending workers OUTSIDE");
                continue;
            }
            auto counts = largest_remainder(static_cast<int64_t>(workers.size()), row);
            std::size_t cursor = 0;
            for (std::size_t d = 0; d < cm.destinations.size(); ++d) {
                for (int64_t k = 0; k < counts[d] && cursor < workers.size(); ++k, ++cursor) {
                    pop.persons[static_cast<std::size_t>(workers[cursor])].work_cbg =
                        cm.destinations[d];
                }
            }
            // shortfall vs the integerized row is already absorbed (the row
            // was integerized to the worker count); leftovers go OUTSIDE
            for (; cursor < workers.size(); ++cursor) {
                pop.persons[static_cast<std::size_t>(workers[cursor])].work_cbg = kOutside;
                ++report.commute_deficit;
            }
        }
    }
}

void generate_workplaces(Population& pop,
                         const std::map<std::string, LognormalParams>& county_params,
                         const RegionInputs& region, uint64_t master_seed,
                         PlacementReport& report) {
    // destination -> industry -> workers
    std::map<std::string, std::array<std::vector<int64_t>, kNumIndustries>> groups;
    std::vector<int64_t> outbound;  // residents working outside the region
    for (const Person& p : pop.persons) {
        if (!p.attrs.employed() || p.work_cbg.empty()) continue;
        if (p.work_cbg == kOutside) {
            outbound.push_back(p.id);
        } else {
            groups[p.work_cbg][static_cast<std::size_t>(p.attrs.industry)].push_back(p.id);
        }
    }

    int64_t workplace_seq = 0;
    for (auto& [dest, by_industry] : groups) {
        const std::string& county = region.geo_of(dest).county;
        auto params_it = county_params.find(county);
        LognormalParams params =
            params_it != county_params.end() ? params_it->second : LognormalParams{std::log(10.0), 1.0};
        for (std::size_t ind = 0; ind < kNumIndustries; ++ind) {
            auto& workers = by_industry[ind];
            if (workers.empty()) continue;
            RngStream rng = RngStream::derive(
                master_seed, "workplaces",
                RngStream::hash_str(dest) * 31 + static_cast<uint64_t>(ind));

            int64_t needed = static_cast<int64_t>(workers.size());
            std::vector<std::pair<int32_t, int64_t>> created;  // (place idx, drawn size)
            int64_t slots = 0;
            while (slots < needed) {
                int64_t size = std::max<int64_t>(
                    1, std::llround(std::exp(rng.normal(params.mu, params.sigma))));
                Place w;
                w.id = "W" + std::to_string(workplace_seq++);
                w.kind = Place::Kind::Workplace;
                w.cbg = dest;
                w.industry = static_cast<int8_t>(ind);
                w.drawn_size = size;
                created.emplace_back(pop.add_place(std::move(w)), size);
                slots += size;
            }
            rng.shuffle(workers);
            std::size_t cursor = 0;
            for (auto& [place_idx, size] : created) {
                Place& w = pop.places[static_cast<std::size_t>(place_idx)];
                for (int64_t s = 0; s < size; ++s) {
                    int64_t pid;
                    if (cursor < workers.size()) {
                        pid = workers[cursor++];
                    } else {
                        // unfilled slots become placeholder commuters from
                        // outside the synthesis area
                        Person ph;
                        ph.id = static_cast<int64_t>(pop.persons.size());
                        ph.home_cbg = kOutside;
                        ph.placeholder = true;
                        ph.attrs.age = static_cast<int>(rng.uniform_int(18, 64));
                        ph.attrs.sex = rng.bernoulli(0.5) ? 'M' : 'F';
                        ph.attrs.industry = static_cast<int8_t>(ind);
                        ph.attrs.is_worker = true;
                        ph.work_cbg = dest;
                        pop.persons.push_back(ph);
                        pid = ph.id;
                        ++report.placeholders_created;
                    }
                    pop.persons[static_cast<std::size_t>(pid)].work_place = place_idx;
                    w.members.push_back(pid);
                }
            }
        }
    }

    // single-person placeholder workplaces for residents commuting outside;
    // these never produce a workplace network
    std::sort(outbound.begin(), outbound.end());
    for (int64_t pid : outbound) {
        Place w;
        w.id = "W" + std::to_string(workplace_seq++);
        w.kind = Place::Kind::Workplace;
        w.cbg = kOutside;
        w.industry = pop.persons[static_cast<std::size_t>(pid)].attrs.industry;
        w.drawn_size = 1;
        w.members.push_back(pid);
        int32_t idx = pop.add_place(std::move(w));
        pop.persons[static_cast<std::size_t>(pid)].work_place = idx;
    }
}

void assign_teachers(Population& pop, const RegionInputs& region,
                     const std::vector<std::string>& populated_cbgs, uint64_t master_seed,
                     PlacementReport& report) {
    // schools in stable id order
    std::vector<int32_t> school_places;
    for (std::size_t i = 0; i < pop.places.size(); ++i) {
        if (pop.places[i].kind == Place::Kind::School) {
            school_places.push_back(static_cast<int32_t>(i));
        }
    }
    std::sort(school_places.begin(), school_places.end(), [&](int32_t a, int32_t b) {
        return pop.places[static_cast<std::size_t>(a)].id <
               pop.places[static_cast<std::size_t>(b)].id;
    });

    // eligible teachers by work cbg
    auto workers_by_cbg = [&](int8_t industry) {
        std::map<std::string, std::vector<int64_t>> out;
        for (const Person& p : pop.persons) {
            if (p.attrs.industry == industry && p.work_place >= 0 &&
                p.attrs.grade == kNoGrade && !p.work_cbg.empty() && p.work_cbg != kOutside) {
                const Place& wp = pop.places[static_cast<std::size_t>(p.work_place)];
                if (wp.kind == Place::Kind::Workplace) out[p.work_cbg].push_back(p.id);
            }
        }
        return out;
    };
    auto edu_by_cbg = workers_by_cbg(static_cast<int8_t>(Industry::EDU));

    for (int32_t place_idx : school_places) {
        Place& school = pop.places[static_cast<std::size_t>(place_idx)];
        int64_t needed = round_half_up(school.n_teachers);
        if (needed <= 0) continue;

        // place index equals school index (register_schools contract)
        const School& src = region.schools[static_cast<std::size_t>(place_idx)];
        std::string nearest;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& cbg : populated_cbgs) {
            const GeoRow& g = region.geo_of(cbg);
            double dx = g.centroid_x - src.x, dy = g.centroid_y - src.y;
            double d = dx * dx + dy * dy;
            if (d < best || (d == best && cbg < nearest)) {
                best = d;
                nearest = cbg;
            }
        }
        if (nearest.empty()) continue;

        std::string tract = tract_of(nearest);
        std::string county = region.geo_of(nearest).county;
        std::vector<std::vector<int64_t>> tiers(3);
        for (auto& [cbg, ids] : edu_by_cbg) {
            int tier;
            if (cbg == nearest) tier = 0;
            else if (tract_of(cbg) == tract) tier = 1;
            else if (region.geo_of(cbg).county == county) tier = 2;
            else continue;
            for (int64_t id : ids) tiers[static_cast<std::size_t>(tier)].push_back(id);
        }

        RngStream rng =
            RngStream::derive(master_seed, "teachers", RngStream::hash_str(school.id));
        auto draw = draw_tiered(tiers, needed, rng);
        for (int64_t id : draw.drawn) {
            reassign_workplace(pop, id, place_idx);
            // drop the drafted teacher from the candidate pool
            for (auto& [cbg, ids] : edu_by_cbg) {
                ids.erase(std::remove(ids.begin(), ids.end(), id), ids.end());
            }
        }
        if (draw.deficit > 0) {
            report.teacher_deficit += draw.deficit;
            log::warn("school " + school.id + " under-staffed by " +
                      std::to_string(draw.deficit) + " teachers");
        }
    }
}

void assign_gq_staff(Population& pop, const RegionInputs& region,
                     const std::vector<std::string>& populated_cbgs, uint64_t master_seed,
                     PlacementReport& report) {
    (void)populated_cbgs;
    std::vector<int32_t> gq_places;
    for (std::size_t i = 0; i < pop.places.size(); ++i) {
        if (pop.places[i].kind == Place::Kind::Gq) gq_places.push_back(static_cast<int32_t>(i));
    }
    std::sort(gq_places.begin(), gq_places.end(), [&](int32_t a, int32_t b) {
        return pop.places[static_cast<std::size_t>(a)].id <
               pop.places[static_cast<std::size_t>(b)].id;
    });

    std::map<std::string, std::vector<int64_t>> adm_by_cbg;
    for (const Person& p : pop.persons) {
        if (p.attrs.industry == static_cast<int8_t>(Industry::ADM_MIL) && p.work_place >= 0 &&
            p.attrs.grade == kNoGrade && !p.work_cbg.empty() && p.work_cbg != kOutside &&
            p.gq_place < 0) {
            const Place& wp = pop.places[static_cast<std::size_t>(p.work_place)];
            if (wp.kind == Place::Kind::Workplace) adm_by_cbg[p.work_cbg].push_back(p.id);
        }
    }

    for (int32_t place_idx : gq_places) {
        Place& gq = pop.places[static_cast<std::size_t>(place_idx)];
        int64_t needed = gq_staff_count(gq.gq_type, static_cast<int64_t>(gq.members.size()));
        if (needed <= 0) continue;

        std::string tract = tract_of(gq.cbg);
        std::string county = region.geo_of(gq.cbg).county;
        std::vector<std::vector<int64_t>> tiers(3);
        for (auto& [cbg, ids] : adm_by_cbg) {
            int tier;
            if (cbg == gq.cbg) tier = 0;
            else if (tract_of(cbg) == tract) tier = 1;
            else if (region.geo_of(cbg).county == county) tier = 2;
            else continue;
            for (int64_t id : ids) tiers[static_cast<std::size_t>(tier)].push_back(id);
        }

        RngStream rng = RngStream::derive(master_seed, "gq-staff", RngStream::hash_str(gq.id));
        auto draw = draw_tiered(tiers, needed, rng);
        for (int64_t id : draw.drawn) {
            reassign_workplace(pop, id, place_idx);
            for (auto& [cbg, ids] : adm_by_cbg) {
                ids.erase(std::remove(ids.begin(), ids.end(), id), ids.end());
            }
        }
        if (draw.deficit > 0) {
            report.gq_staff_deficit += draw.deficit;
            log::warn("GQ " + gq.id + " under-staffed by " + std::to_string(draw.deficit));
        }
    }
}

}  // namespace synthnet
