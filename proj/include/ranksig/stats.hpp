#pragma once

#include "ranksig/error.hpp"
#include "ranksig/record.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ranksig {

// Two-sided thresholds for p < .05, .01 and .001.
inline constexpr double z_p05 = 1.96;
inline constexpr double z_p01 = 2.576;
inline constexpr double z_p001 = 3.29;

enum class significance { not_significant, p05, p01, p001 };

inline const char* stars(significance s) noexcept {
    switch (s) {
    case significance::not_significant: return "ns";
    case significance::p05: return "*";
    case significance::p01: return "**";
    case significance::p001: return "***";
    }
    return "ns";
}

// Threshold boundaries are inclusive on the more significant side.
inline significance significance_level(double z) {
    if (std::isnan(z)) throw error(errc::invalid_statistic, "z is NaN");
    const double a = std::abs(z);
    if (a >= z_p001) return significance::p001;
    if (a >= z_p01) return significance::p01;
    if (a >= z_p05) return significance::p05;
    return significance::not_significant;
}

// Upper-tail probability of a chi-square statistic with `df` degrees of freedom.
inline double chi_square_p_value(double chi2, std::size_t df) {
    if (std::isnan(chi2) || chi2 < 0.0) throw error(errc::invalid_statistic, "chi-square must be >= 0");
    if (df == 0) throw error(errc::degenerate_table, "zero degrees of freedom");
    return boost::math::gamma_q(static_cast<double>(df) / 2.0, chi2 / 2.0);
}

inline significance significance_from_p(double p) {
    if (std::isnan(p)) throw error(errc::invalid_statistic, "p-value is NaN");
    if (p < 0.001) return significance::p001;
    if (p < 0.01) return significance::p01;
    if (p < 0.05) return significance::p05;
    return significance::not_significant;
}

// r x c table of non-negative real counts with labels. Margins are computed on
// demand so they always equal the cell sums.
class contingency_table {
public:
    contingency_table() = default;

    contingency_table(std::vector<std::string> rows, std::vector<std::string> cols,
                      std::vector<std::vector<double>> cells)
        : rows_(std::move(rows)), cols_(std::move(cols)), cells_(std::move(cells)) {
        if (cells_.size() != rows_.size())
            throw error(errc::degenerate_table, "row label count does not match cell rows");
        for (const auto& r : cells_) {
            if (r.size() != cols_.size())
                throw error(errc::degenerate_table, "ragged table: every row needs one cell per column");
            for (double v : r)
                if (!std::isfinite(v) || v < 0.0)
                    throw error(errc::degenerate_table, "cells must be finite and >= 0");
        }
    }

    // Unlabeled convenience constructor; labels become r0.., c0...
    explicit contingency_table(std::vector<std::vector<double>> cells)
        : contingency_table(make_labels("r", cells.size()),
                            make_labels("c", cells.empty() ? 0 : cells.front().size()), cells) {}

    std::size_t row_count() const noexcept { return rows_.size(); }
    std::size_t col_count() const noexcept { return cols_.size(); }
    const std::vector<std::string>& row_labels() const noexcept { return rows_; }
    const std::vector<std::string>& col_labels() const noexcept { return cols_; }
    const std::vector<std::vector<double>>& cells() const noexcept { return cells_; }
    double operator()(std::size_t i, std::size_t j) const { return cells_.at(i).at(j); }

    double row_total(std::size_t i) const {
        double s = 0.0;
        for (double v : cells_.at(i)) s += v;
        return s;
    }
    double col_total(std::size_t j) const {
        double s = 0.0;
        for (const auto& r : cells_) s += r.at(j);
        return s;
    }
    double grand_total() const {
        double s = 0.0;
        for (const auto& r : cells_)
            for (double v : r) s += v;
        return s;
    }

    // At least 2x2 with a positive grand total.
    void require_analyzable() const {
        if (row_count() < 2 || col_count() < 2)
            throw error(errc::degenerate_table, "need at least 2 rows and 2 columns, got " +
                                                    std::to_string(row_count()) + "x" +
                                                    std::to_string(col_count()));
        if (!(grand_total() > 0.0)) throw error(errc::degenerate_table, "grand total is zero");
    }

private:
    static std::vector<std::string> make_labels(const char* prefix, std::size_t n) {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
        return out;
    }

    std::vector<std::string> rows_;
    std::vector<std::string> cols_;
    std::vector<std::vector<double>> cells_;
};

// E[i][j] = row_i * col_j / N. Never throws for zero margins; use
// zero_expected_cells() to detect the degenerate case.
inline contingency_table expected_table(const contingency_table& obs) {
    obs.require_analyzable();
    const double n = obs.grand_total();
    std::vector<double> row_totals(obs.row_count());
    std::vector<double> col_totals(obs.col_count());
    for (std::size_t i = 0; i < obs.row_count(); ++i) row_totals[i] = obs.row_total(i);
    for (std::size_t j = 0; j < obs.col_count(); ++j) col_totals[j] = obs.col_total(j);

    std::vector<std::vector<double>> e(obs.row_count(), std::vector<double>(obs.col_count()));
    for (std::size_t i = 0; i < obs.row_count(); ++i)
        for (std::size_t j = 0; j < obs.col_count(); ++j) e[i][j] = row_totals[i] * col_totals[j] / n;
    return contingency_table(obs.row_labels(), obs.col_labels(), std::move(e));
}

inline std::vector<std::pair<std::size_t, std::size_t>> zero_expected_cells(const contingency_table& expected) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < expected.row_count(); ++i)
        for (std::size_t j = 0; j < expected.col_count(); ++j)
            if (!(expected(i, j) > 0.0)) out.emplace_back(i, j);
    return out;
}

namespace detail {

inline contingency_table expected_or_throw(const contingency_table& obs) {
    auto e = expected_table(obs);
    if (auto zero = zero_expected_cells(e); !zero.empty()) {
        const auto [i, j] = zero.front();
        throw error(errc::zero_expected_cell,
                    "expected count is zero in cell (" + obs.row_labels()[i] + ", " + obs.col_labels()[j] + ")");
    }
    return e;
}

} // namespace detail

// Per-cell (O - E)^2 / E.
inline std::vector<std::vector<double>> chi_square_terms(const contingency_table& obs) {
    const auto e = detail::expected_or_throw(obs);
    std::vector<std::vector<double>> out(obs.row_count(), std::vector<double>(obs.col_count()));
    for (std::size_t i = 0; i < obs.row_count(); ++i)
        for (std::size_t j = 0; j < obs.col_count(); ++j) {
            const double d = obs(i, j) - e(i, j);
            out[i][j] = d * d / e(i, j);
        }
    return out;
}

inline double chi_square(const contingency_table& obs) {
    double s = 0.0;
    for (const auto& row : chi_square_terms(obs))
        for (double v : row) s += v;
    return s;
}

// (O - E) / sqrt(E); each entry reads as a z-score for its cell.
inline std::vector<std::vector<double>> standardized_residuals(const contingency_table& obs) {
    const auto e = detail::expected_or_throw(obs);
    std::vector<std::vector<double>> out(obs.row_count(), std::vector<double>(obs.col_count()));
    for (std::size_t i = 0; i < obs.row_count(); ++i)
        for (std::size_t j = 0; j < obs.col_count(); ++j)
            out[i][j] = (obs(i, j) - e(i, j)) / std::sqrt(e(i, j));
    return out;
}

inline std::size_t degrees_of_freedom(const contingency_table& t) {
    return (t.row_count() - 1) * (t.col_count() - 1);
}

inline double pooled_proportion(double t1, double n1, double t2, double n2) {
    if (!(n1 + n2 > 0.0)) throw error(errc::empty_pool, "n1 + n2 must be positive");
    if (t1 < 0.0 || t2 < 0.0 || t1 > n1 || t2 > n2)
        throw error(errc::invalid_statistic, "counts must satisfy 0 <= t <= n");
    return (t1 + t2) / (n1 + n2);
}

struct z_result {
    double z = 0.0;
    bool degenerate_pool = false; // pooled was 0 or 1 and both proportions equal
};

// z = (p1 - p2) / sqrt(pooled (1 - pooled) (1/n1 + 1/n2)).
inline z_result z_two_proportions(double p1, double n1, double p2, double n2, double pooled) {
    if (!(n1 > 0.0) || !(n2 > 0.0)) throw error(errc::empty_institution, "sample sizes must be positive");
    if (std::isnan(p1) || std::isnan(p2) || std::isnan(pooled) || pooled < 0.0 || pooled > 1.0)
        throw error(errc::invalid_statistic, "proportions must lie in [0,1]");
    if (pooled == 0.0 || pooled == 1.0) {
        if (p1 == p2) return {0.0, true};
        throw error(errc::degenerate_pool, "pooled proportion is " + std::to_string(pooled) +
                                               " but the proportions differ");
    }
    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
    return {(p1 - p2) / se, false};
}

// Where a record's proportion comes from: the published percentage or t / p.
enum class proportion_source { stored, exact };

inline double share(const institution_record& r, proportion_source src) {
    return src == proportion_source::stored ? r.pp_top10 : r.exact_share();
}

// Record-versus-record z-test. The pooled proportion always uses the counts.
inline z_result z_between(const institution_record& a, const institution_record& b,
                          proportion_source src = proportion_source::stored) {
    if (!(a.p > 0.0)) throw error(errc::empty_institution, "'" + a.name + "' has no publications");
    if (!(b.p > 0.0)) throw error(errc::empty_institution, "'" + b.name + "' has no publications");
    const double pooled = pooled_proportion(a.t_top10, a.p, b.t_top10, b.p);
    return z_two_proportions(share(a, src), a.p, share(b, src), b.p, pooled);
}

// Single institution against the expected share p0 (10% by construction of
// the top-10% class): n1 = n2 = P, t2 = p0 * P.
inline double z_vs_expectation(const institution_record& rec, double p0 = 0.1,
                               proportion_source src = proportion_source::stored) {
    if (!(rec.p > 0.0)) throw error(errc::empty_institution, "'" + rec.name + "' has no publications");
    const double pooled = (rec.t_top10 + p0 * rec.p) / (2.0 * rec.p);
    return z_two_proportions(share(rec, src), rec.p, p0, rec.p, pooled).z;
}

// The 2x2 observed table {top, non-top} x {a, b} used for the chi-square route.
inline contingency_table pair_table(const institution_record& a, const institution_record& b) {
    return contingency_table({a.name, b.name}, {"top-10%", "non-top"},
                             {{a.t_top10, a.p - a.t_top10}, {b.t_top10, b.p - b.t_top10}});
}

struct pairwise_test {
    std::string a;
    std::string b;
    double z = 0.0;
    double chi2 = 0.0;
    std::vector<std::vector<double>> residuals;
    significance level = significance::not_significant;
};

inline pairwise_test compare_pair(const institution_record& a, const institution_record& b,
                                  proportion_source src = proportion_source::stored) {
    pairwise_test t;
    t.a = a.name;
    t.b = b.name;
    t.z = z_between(a, b, src).z;
    const auto table = pair_table(a, b);
    if (zero_expected_cells(expected_table(table)).empty()) {
        t.chi2 = chi_square(table);
        t.residuals = standardized_residuals(table);
    } else {
        t.residuals.assign(2, std::vector<double>(2, 0.0));
    }
    t.level = significance_level(t.z);
    return t;
}

enum class interval_kind { disjoint, overlap, containment };
enum class containment_direction { a_in_b, b_in_a, mutual };

struct interval_relation {
    interval_kind kind = interval_kind::disjoint;
    std::optional<containment_direction> direction; // set only for containment

    bool linked() const noexcept { return kind != interval_kind::disjoint; }
};

inline const char* to_string(interval_kind k) noexcept {
    switch (k) {
    case interval_kind::disjoint: return "disjoint";
    case interval_kind::overlap: return "overlap";
    case interval_kind::containment: return "containment";
    }
    return "disjoint";
}

// Closed intervals; shared endpoints count as overlap.
inline interval_relation ci_relation(const interval& a, const interval& b) {
    if (std::isnan(a.lower) || std::isnan(a.upper) || std::isnan(b.lower) || std::isnan(b.upper) ||
        a.lower > a.upper || b.lower > b.upper)
        throw error(errc::invalid_statistic, "interval bounds must satisfy lower <= upper");
    if (a.upper < b.lower || b.upper < a.lower) return {interval_kind::disjoint, std::nullopt};
    const bool a_in_b = b.lower <= a.lower && a.upper <= b.upper;
    const bool b_in_a = a.lower <= b.lower && b.upper <= a.upper;
    if (a_in_b && b_in_a) return {interval_kind::containment, containment_direction::mutual};
    if (a_in_b) return {interval_kind::containment, containment_direction::a_in_b};
    if (b_in_a) return {interval_kind::containment, containment_direction::b_in_a};
    return {interval_kind::overlap, std::nullopt};
}

inline interval_relation ci_relation(const institution_record& a, const institution_record& b) {
    const auto ia = a.stability_interval();
    const auto ib = b.stability_interval();
    if (!ia) throw error(errc::missing_interval, "'" + a.name + "' has no stability interval");
    if (!ib) throw error(errc::missing_interval, "'" + b.name + "' has no stability interval");
    return ci_relation(*ia, *ib);
}

} // namespace ranksig
