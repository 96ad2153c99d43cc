#include "synthnet/schema.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "synthnet/util.hpp"

namespace synthnet {

namespace {

using nlohmann::json;

Condition::Op parse_op(const std::string& key, const std::string& col) {
    if (key == "eq") return Condition::Op::Eq;
    if (key == "ne") return Condition::Op::Ne;
    if (key == "lt") return Condition::Op::Lt;
    if (key == "le") return Condition::Op::Le;
    if (key == "gt") return Condition::Op::Gt;
    if (key == "ge") return Condition::Op::Ge;
    if (key == "in") return Condition::Op::In;
    throw ValidationError("schema column '" + col + "': unknown operator '" + key + "'");
}

TargetColumn::Level parse_level(const std::string& s, const std::string& col) {
    if (s == "household") return TargetColumn::Level::Household;
    if (s == "householder") return TargetColumn::Level::Householder;
    if (s == "person") return TargetColumn::Level::Person;
    throw ValidationError("schema column '" + col + "': unknown level '" + s + "'");
}

// Numeric fields a predicate may reference, looked up against a person (and
// its household context) or against household aggregates.
struct HouseholdView {
    const std::vector<PersonAttrs>& members;
    int64_t income = 0;
    int n_workers = 0;
    int n_under18 = 0;
    int n_under6 = 0;
    int n_adults = 0;
    int n_65plus = 0;

    explicit HouseholdView(const std::vector<PersonAttrs>& m) : members(m) {
        if (!m.empty()) income = m.front().income;
        for (const auto& p : m) {
            if (p.is_worker) ++n_workers;
            if (p.age < 18) ++n_under18;
            if (p.age < 6) ++n_under6;
            if (p.age >= 18) ++n_adults;
            if (p.age >= 65) ++n_65plus;
        }
    }
};

bool numeric_field(const std::string& field, const PersonAttrs* person, const HouseholdView& hh,
                   double& out) {
    if (person) {
        if (field == "age") { out = person->age; return true; }
        if (field == "grade") { out = person->grade; return true; }
        if (field == "is_worker") { out = person->is_worker ? 1 : 0; return true; }
        if (field == "income") { out = static_cast<double>(person->income); return true; }
    }
    if (field == "size") { out = static_cast<double>(hh.members.size()); return true; }
    if (field == "income") { out = static_cast<double>(hh.income); return true; }
    if (field == "n_workers") { out = hh.n_workers; return true; }
    if (field == "n_under18") { out = hh.n_under18; return true; }
    if (field == "n_under6") { out = hh.n_under6; return true; }
    if (field == "n_adults") { out = hh.n_adults; return true; }
    if (field == "n_65plus") { out = hh.n_65plus; return true; }
    return false;
}

bool string_field(const std::string& field, const PersonAttrs* person, std::string& out) {
    if (!person) return false;
    if (field == "sex") { out = std::string(1, person->sex); return true; }
    if (field == "race") { out = person->race; return true; }
    if (field == "industry") {
        out = person->industry >= 0 ? industry_names()[static_cast<std::size_t>(person->industry)]
                                    : std::string();
        return true;
    }
    return false;
}

bool eval_condition(const Condition& c, const PersonAttrs* person, const HouseholdView& hh) {
    if (c.is_numeric) {
        double v = 0.0;
        if (!numeric_field(c.field, person, hh, v)) {
            throw ValidationError("schema predicate: unknown numeric field '" + c.field + "'");
        }
        switch (c.op) {
            case Condition::Op::Eq: return v == c.num_value;
            case Condition::Op::Ne: return v != c.num_value;
            case Condition::Op::Lt: return v < c.num_value;
            case Condition::Op::Le: return v <= c.num_value;
            case Condition::Op::Gt: return v > c.num_value;
            case Condition::Op::Ge: return v >= c.num_value;
            case Condition::Op::In:
                for (double x : c.num_set)
                    if (v == x) return true;
                return false;
        }
        return false;
    }
    std::string v;
    if (!string_field(c.field, person, v)) {
        throw ValidationError("schema predicate: unknown string field '" + c.field + "'");
    }
    switch (c.op) {
        case Condition::Op::Eq: return v == c.str_value;
        case Condition::Op::Ne: return v != c.str_value;
        case Condition::Op::In:
            for (const auto& s : c.str_set)
                if (v == s) return true;
            return false;
        default:
            throw ValidationError("schema predicate: ordering operator on string field '" +
                                  c.field + "'");
    }
}

bool eval_all(const std::vector<Condition>& where, const PersonAttrs* person,
              const HouseholdView& hh) {
    for (const auto& c : where) {
        if (!eval_condition(c, person, hh)) return false;
    }
    return true;
}

}  // namespace

TargetSchema parse_schema_json(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(origin + ": invalid JSON: " + e.what());
    }
    TargetSchema schema;
    schema.name = doc.value("name", "unnamed");
    if (!doc.contains("columns") || !doc["columns"].is_array() || doc["columns"].empty()) {
        throw ValidationError(origin + ": schema needs a non-empty 'columns' array");
    }
    for (const auto& jc : doc["columns"]) {
        TargetColumn col;
        col.name = jc.at("name").get<std::string>();
        if (jc.contains("raw")) {
            for (const auto& r : jc["raw"]) col.raw_columns.push_back(r.get<std::string>());
        } else {
            col.raw_columns.push_back(col.name);
        }
        col.level = parse_level(jc.value("level", "household"), col.name);
        if (jc.contains("where")) {
            for (auto it = jc["where"].begin(); it != jc["where"].end(); ++it) {
                const std::string& field = it.key();
                if (!it.value().is_object()) {
                    throw ValidationError("schema column '" + col.name + "': field '" + field +
                                          "' must map to an {op: value} object");
                }
                for (auto op_it = it.value().begin(); op_it != it.value().end(); ++op_it) {
                    Condition c;
                    c.field = field;
                    c.op = parse_op(op_it.key(), col.name);
                    const json& v = op_it.value();
                    if (c.op == Condition::Op::In) {
                        if (!v.is_array() || v.empty()) {
                            throw ValidationError("schema column '" + col.name +
                                                  "': 'in' needs a non-empty array");
                        }
                        c.is_numeric = v.front().is_number();
                        for (const auto& x : v) {
                            if (c.is_numeric)
                                c.num_set.push_back(x.get<double>());
                            else
                                c.str_set.push_back(x.get<std::string>());
                        }
                    } else if (v.is_number()) {
                        c.is_numeric = true;
                        c.num_value = v.get<double>();
                    } else if (v.is_boolean()) {
                        c.is_numeric = true;
                        c.num_value = v.get<bool>() ? 1.0 : 0.0;
                    } else {
                        c.is_numeric = false;
                        c.str_value = v.get<std::string>();
                    }
                    col.where.push_back(std::move(c));
                }
            }
        }
        schema.columns.push_back(std::move(col));
    }
    return schema;
}

TargetSchema load_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_schema_json(ss.str(), path.filename().string());
}

TargetVector household_contribution(const std::vector<PersonAttrs>& members,
                                    const TargetSchema& schema) {
    HouseholdView hh(members);
    TargetVector out(schema.width(), 0.0);
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
        const TargetColumn& col = schema.columns[i];
        switch (col.level) {
            case TargetColumn::Level::Household:
                out[i] = eval_all(col.where, nullptr, hh) ? 1.0 : 0.0;
                break;
            case TargetColumn::Level::Householder:
                // member 0 is the householder by convention
                out[i] = !members.empty() && eval_all(col.where, &members.front(), hh) ? 1.0 : 0.0;
                break;
            case TargetColumn::Level::Person: {
                double n = 0.0;
                for (const auto& p : members) {
                    if (eval_all(col.where, &p, hh)) n += 1.0;
                }
                out[i] = n;
                break;
            }
        }
    }
    return out;
}

const std::array<std::string, kNumIndustries>& industry_names() {
    static const std::array<std::string, kNumIndustries> names = {
        "AGR_EXT", "CON", "MFG",     "WHL",      "RET", "TRN_UTL", "INF",    "FIN",
        "PRF",     "EDU", "MED",     "ENT_art",  "ENT_food", "SRV", "ADM_MIL"};
    return names;
}

std::optional<Industry> industry_from_string(const std::string& s) {
    const auto& names = industry_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == s) return static_cast<Industry>(i);
    }
    return std::nullopt;
}

const std::array<std::string, 3>& gq_band_names() {
    static const std::array<std::string, 3> names = {"under18", "18_64", "65plus"};
    return names;
}

const std::array<std::string, 3>& gq_type_names() {
    static const std::array<std::string, 3> names = {"institutional", "civilian_noninst",
                                                     "military"};
    return names;
}

}  // namespace synthnet
