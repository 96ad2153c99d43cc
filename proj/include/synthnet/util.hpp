#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace synthnet {

// Exit-code mapping: ValidationError -> 1, DataError -> 2, InfeasibleError -> 3.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace log {

inline std::mutex& mutex() {
    static std::mutex m;
    return m;
}

inline bool& quiet() {
    static bool q = false;
    return q;
}

inline void warn(const std::string& msg) {
    if (quiet()) return;
    std::lock_guard<std::mutex> lock(mutex());
    std::cerr << "[warn] " << msg << "\n";
}

inline void info(const std::string& msg) {
    if (quiet()) return;
    std::lock_guard<std::mutex> lock(mutex());
    std::cerr << "[info] " << msg << "\n";
}

}  // namespace log

// Shortest round-trip decimal form of a double. Keeps output files stable
// across runs and thread counts.
inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, bool& ok) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    ok = res.ec == std::errc() && res.ptr == s.data() + s.size();
    if (!ok) {
        // from_chars rejects "inf"/"nan" spellings; fall back for those.
        try {
            std::size_t pos = 0;
            v = std::stod(std::string(s), &pos);
            ok = pos == s.size();
        } catch (...) {
            ok = false;
        }
    }
    return v;
}

inline int64_t parse_int(std::string_view s, bool& ok) {
    int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    ok = res.ec == std::errc() && res.ptr == s.data() + s.size();
    return v;
}

// Runs fn(i) for i in [0, n) on up to n_threads workers. Callers make results
// deterministic by writing into index-addressed slots.
inline void parallel_for(std::size_t n, int n_threads,
                         const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (n_threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(n_threads), n);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < n_workers; ++w) {
        workers.emplace_back([&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// Largest-remainder apportionment of `total` units over non-negative weights.
// Conserves the total exactly; remainder ties resolved by lowest index.
inline std::vector<int64_t> largest_remainder(int64_t total, const std::vector<double>& weights) {
    std::vector<int64_t> out(weights.size(), 0);
    if (total <= 0 || weights.empty()) return out;
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (wsum <= 0.0) return out;

    std::vector<double> frac(weights.size());
    int64_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double share = static_cast<double>(total) * (weights[i] / wsum);
        int64_t base = static_cast<int64_t>(share);
        out[i] = base;
        frac[i] = share - static_cast<double>(base);
        assigned += base;
    }
    int64_t remaining = total - assigned;
    std::vector<std::size_t> order(weights.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (int64_t k = 0; k < remaining && k < static_cast<int64_t>(order.size()); ++k) {
        out[order[static_cast<std::size_t>(k)]] += 1;
    }
    return out;
}

inline int64_t round_half_up(double x) {
    return static_cast<int64_t>(std::floor(x + 0.5));
}

}  // namespace synthnet
