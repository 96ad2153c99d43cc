#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "synthnet/types.hpp"

namespace synthnet {

// One comparison inside a column predicate. Numeric fields compare by value,
// string fields by code; `in` matches any listed value.
struct Condition {
    enum class Op { Eq, Ne, Lt, Le, Gt, Ge, In };
    std::string field;
    Op op = Op::Eq;
    double num_value = 0.0;
    std::string str_value;
    std::vector<std::string> str_set;
    std::vector<double> num_set;
    bool is_numeric = true;
};

// A target column: how to read its census-side count (sum of raw marginal
// columns) and how to count it from household members (the o side).
struct TargetColumn {
    enum class Level { Household, Householder, Person };
    std::string name;
    std::vector<std::string> raw_columns;
    Level level = Level::Household;
    std::vector<Condition> where;  // conjunction
};

struct TargetSchema {
    std::string name;
    std::vector<TargetColumn> columns;

    std::size_t width() const { return columns.size(); }
};

TargetSchema load_schema(const std::filesystem::path& path);
TargetSchema parse_schema_json(const std::string& text, const std::string& origin);

// Household-level sums for every schema column (the contribution vector of a
// microdata household).
TargetVector household_contribution(const std::vector<PersonAttrs>& members,
                                    const TargetSchema& schema);

}  // namespace synthnet
