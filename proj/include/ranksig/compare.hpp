#pragma once

// Association between two categorical labelings of the same institutions.

#include "ranksig/error.hpp"
#include "ranksig/ingest.hpp"
#include "ranksig/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace ranksig {

using labeling = std::vector<std::pair<std::string, std::string>>; // (institution, category)
using crosstab_table = contingency_table;

// Counts institutions present in both labelings. Categories are ordered by
// first appearance while walking `a` in its given order.
inline crosstab_table crosstab(const labeling& a, const labeling& b) {
    std::map<std::string, std::string> la(a.begin(), a.end());
    std::map<std::string, std::string> lb(b.begin(), b.end());
    if (la.size() != a.size() || lb.size() != b.size())
        throw error(errc::duplicate_record, "an institution is labeled twice");

    std::vector<std::string> rows, cols;
    std::map<std::string, std::size_t> row_idx, col_idx;
    std::vector<std::pair<std::size_t, std::size_t>> hits;
    for (const auto& [name, cat_a] : a) {
        auto it = lb.find(name);
        if (it == lb.end()) continue;
        auto [ri, new_row] = row_idx.emplace(cat_a, rows.size());
        if (new_row) rows.push_back(cat_a);
        auto [ci, new_col] = col_idx.emplace(it->second, cols.size());
        if (new_col) cols.push_back(it->second);
        hits.emplace_back(ri->second, ci->second);
    }
    if (hits.empty()) throw error(errc::no_overlap, "the labelings share no institution");
    std::vector<std::vector<double>> cells(rows.size(), std::vector<double>(cols.size(), 0.0));
    for (auto [i, j] : hits) cells[i][j] += 1.0;
    return crosstab_table(std::move(rows), std::move(cols), std::move(cells));
}

// Same, with explicit category orders (categories absent from the data keep
// an all-zero row or column).
inline crosstab_table crosstab(const labeling& a, const labeling& b, const std::vector<std::string>& row_order,
                               const std::vector<std::string>& col_order) {
    const auto raw = crosstab(a, b);
    std::vector<std::vector<double>> cells(row_order.size(), std::vector<double>(col_order.size(), 0.0));
    for (std::size_t i = 0; i < raw.row_count(); ++i) {
        auto ri = std::find(row_order.begin(), row_order.end(), raw.row_labels()[i]);
        if (ri == row_order.end()) throw error(errc::unknown_institution, "unexpected category '" + raw.row_labels()[i] + "'");
        for (std::size_t j = 0; j < raw.col_count(); ++j) {
            auto cj = std::find(col_order.begin(), col_order.end(), raw.col_labels()[j]);
            if (cj == col_order.end())
                throw error(errc::unknown_institution, "unexpected category '" + raw.col_labels()[j] + "'");
            cells[ri - row_order.begin()][cj - col_order.begin()] = raw(i, j);
        }
    }
    return crosstab_table(row_order, col_order, std::move(cells));
}

inline double crosstab_chi_square(const crosstab_table& ct) { return chi_square(ct); }

// V = sqrt(chi2 / (N (min(r, c) - 1))), in [0, 1].
inline double cramers_v(const crosstab_table& ct) {
    ct.require_analyzable();
    const double n = ct.grand_total();
    const double k = static_cast<double>(std::min(ct.row_count(), ct.col_count()) - 1);
    return std::sqrt(chi_square(ct) / (n * k));
}

inline double phi(const crosstab_table& ct) {
    ct.require_analyzable();
    return std::sqrt(chi_square(ct) / ct.grand_total());
}

// Average (1-based) ranks; tied values share the mean of their positions.
inline std::vector<double> midranks(const std::vector<double>& xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

// Pearson correlation of midranks.
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size())
        throw error(errc::length_mismatch, "spearman inputs differ in length (" + std::to_string(xs.size()) +
                                               " vs " + std::to_string(ys.size()) + ")");
    if (xs.size() < 2) throw error(errc::length_mismatch, "spearman needs at least two observations");
    auto constant = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    };
    if (constant(xs) || constant(ys)) throw error(errc::constant_input, "spearman input is constant");
    for (double v : xs)
        if (std::isnan(v)) throw error(errc::invalid_statistic, "NaN in spearman input");
    for (double v : ys)
        if (std::isnan(v)) throw error(errc::invalid_statistic, "NaN in spearman input");
    return pearson(midranks(xs), midranks(ys));
}

struct association_report {
    crosstab_table table;
    double chi2 = 0.0;
    std::size_t df = 0;
    double p_value = 1.0;
    significance level = significance::not_significant;
    double cramers_v = 0.0;
    double phi = 0.0;
};

inline association_report associate(crosstab_table table) {
    association_report r;
    r.chi2 = chi_square(table);
    r.df = degrees_of_freedom(table);
    r.p_value = chi_square_p_value(r.chi2, r.df);
    r.level = significance_from_p(r.p_value);
    r.cramers_v = cramers_v(table);
    r.phi = phi(table);
    r.table = std::move(table);
    return r;
}

struct z_point {
    std::size_t rank = 0; // 1-based
    std::string name;
    double z = 0.0;
};

struct z_series {
    std::string category;
    std::vector<z_point> points; // descending z
};

// Per category, z-values sorted in decreasing order (ties by name). Categories
// appear in first-appearance order.
inline std::vector<z_series> z_distribution_series(const std::vector<scored_institution>& scored) {
    if (scored.empty()) throw error(errc::no_match, "no institutions to plot");
    std::vector<z_series> out;
    std::map<std::string, std::size_t> idx;
    for (const auto& s : scored) {
        auto [it, added] = idx.emplace(s.category, out.size());
        if (added) out.push_back({s.category, {}});
        out[it->second].points.push_back({0, s.name, s.z});
    }
    for (auto& series : out) {
        std::sort(series.points.begin(), series.points.end(), [](const z_point& a, const z_point& b) {
            if (a.z != b.z) return a.z > b.z;
            return a.name < b.name;
        });
        for (std::size_t r = 0; r < series.points.size(); ++r) series.points[r].rank = r + 1;
    }
    return out;
}

} // namespace ranksig
