#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "synthval/rng.hpp"
#include "synthval/table.hpp"

namespace fixtures {

using namespace synthval;

inline std::string data_path(const std::string& name) { return std::string(SYNTHVAL_DATA_DIR) + "/" + name; }

inline Column cat(const std::string& name, const std::vector<std::string>& labels) {
    std::vector<std::optional<std::string>> v;
    for (const auto& l : labels) {
        if (l.empty()) v.emplace_back(std::nullopt);
        else v.emplace_back(l);
    }
    return Column::categorical(name, v);
}

inline constexpr double NA = std::numeric_limits<double>::quiet_NaN();

// y = x + noise plus a binary flag correlated with x.
inline Table linear_fixture(std::size_t n, std::uint64_t seed, double noise = 0.1) {
    Rng rng(seed);
    std::vector<double> x(n);
    std::vector<double> y(n);
    std::vector<std::optional<std::string>> flag(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y[i] = x[i] + noise * rng.normal();
        flag[i] = (x[i] + 0.5 * rng.normal() > 0) ? "yes" : "no";
    }
    return Table({Column::numeric("x", x), Column::numeric("y", y), Column::categorical("flag", flag)});
}

// Mixed table: `n_num` numeric columns and `n_cat` categorical columns with
// `levels` levels each, no missing cells.
inline Table random_mixed(std::size_t n, std::size_t n_num, std::size_t n_cat, std::size_t levels, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Column> cols;
    for (std::size_t c = 0; c < n_num; ++c) {
        std::vector<double> v(n);
        const double shift = rng.normal();
        for (auto& x : v) x = shift + rng.normal() * (1.0 + static_cast<double>(c));
        cols.push_back(Column::numeric("n" + std::to_string(c), v));
    }
    for (std::size_t c = 0; c < n_cat; ++c) {
        std::vector<std::optional<std::string>> v(n);
        for (auto& x : v) x = "L" + std::to_string(rng.index(levels));
        cols.push_back(Column::categorical("c" + std::to_string(c), v));
    }
    return Table(std::move(cols));
}

}  // namespace fixtures
