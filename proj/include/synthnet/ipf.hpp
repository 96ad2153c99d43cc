#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "synthnet/types.hpp"

namespace synthnet {

// Dense row-major matrix, just big enough for the fitting problems here.
struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double row_sum(std::size_t r) const {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += at(r, c);
        return s;
    }
    double col_sum(std::size_t c) const {
        double s = 0.0;
        for (std::size_t r = 0; r < rows; ++r) s += at(r, c);
        return s;
    }
    double total() const {
        double s = 0.0;
        for (double v : data) s += v;
        return s;
    }
};

struct IpfProblem {
    Matrix seed;
    std::vector<double> row_targets;
    std::vector<double> col_targets;
    double tol = 1e-8;     // max relative margin error
    int max_iters = 1000;  // full row+column sweeps
};

struct IpfResult {
    Matrix fitted;
    bool converged = false;
    int iterations = 0;    // sweeps performed
    double max_error = 0.0;
};

// Classic alternating row/column scaling. Zero seed cells stay zero; a
// positive target on an all-zero seed line is a structural error.
IpfResult ipf_fit(const IpfProblem& problem);

// Workers by residence type (rows: household, civilian GQ, military GQ)
// crossed with industry (columns). residence_counts order matches the rows.
IpfResult industry_residence_matrix(const std::array<double, kNumIndustries>& employment_counts,
                                    const std::array<double, 3>& residence_counts,
                                    const std::array<double, kNumIndustries>& gq_industry_props);

struct CommuteMatrix {
    std::string origin_cbg;
    std::vector<std::string> destinations;  // column order; may include OUTSIDE
    Matrix cells;                           // kNumIndustries x destinations
    bool converged = false;
};

// Industry-by-destination expected worker counts for one origin CBG. Row sums
// match the census industry counts; column sums match OD destination totals.
CommuteMatrix commute_matrix(const std::string& origin,
                             const std::array<double, kNumIndustries>& industry_counts,
                             const std::vector<OdRow>& od_row,
                             const std::map<std::string, std::array<double, kNumIndustries>>& wac);

}  // namespace synthnet
