#pragma once

#include "ranksig/error.hpp"

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace ranksig {

enum class counting_method { fractional, full };

inline std::string_view to_string(counting_method c) noexcept {
    return c == counting_method::fractional ? "frac" : "full";
}

inline std::optional<counting_method> parse_counting(std::string_view s) {
    if (s == "frac" || s == "fractional") return counting_method::fractional;
    if (s == "full") return counting_method::full;
    return std::nullopt;
}

// A closed interval of proportions, lower <= upper.
struct interval {
    double lower = 0.0;
    double upper = 0.0;
};

// One institution's indicator row for a (period, field, counting) slice.
// All counts are reals: fractional counting yields non-integer P and top-10%.
struct institution_record {
    std::string name;
    std::string country;
    std::string period;
    std::string field;
    counting_method counting = counting_method::fractional;
    double p = 0.0;       // total publications
    double t_top10 = 0.0; // publications in the top-10% class
    double pp_top10 = 0.0;
    std::optional<double> ci_lower;
    std::optional<double> ci_upper;
    bool t_supplied = true; // false when t_top10 was derived as pp_top10 * p

    std::optional<interval> stability_interval() const {
        if (!ci_lower || !ci_upper) return std::nullopt;
        return interval{*ci_lower, *ci_upper};
    }

    // Observed top share from the counts rather than the stored percentage.
    double exact_share() const { return p > 0.0 ? t_top10 / p : 0.0; }

    // |t - pp * p| within half a publication plus 0.5% of P.
    bool counts_consistent() const {
        if (!t_supplied) return true;
        return std::abs(t_top10 - pp_top10 * p) <= 0.5 + 0.005 * p;
    }
};

// Throws invariant_violation naming the record when a hard invariant fails.
inline void validate(const institution_record& r) {
    auto fail = [&](const std::string& why) {
        throw error(errc::invariant_violation, "record '" + r.name + "': " + why);
    };
    auto finite = [](double v) { return std::isfinite(v); };
    if (r.name.empty()) fail("empty name");
    if (!finite(r.p) || !finite(r.t_top10) || !finite(r.pp_top10)) fail("non-finite value");
    if (r.p < 0.0) fail("p < 0");
    if (r.t_top10 < 0.0) fail("t_top10 < 0");
    if (r.t_top10 > r.p) fail("t_top10 > p");
    if (r.pp_top10 < 0.0 || r.pp_top10 > 1.0) fail("pp_top10 outside [0,1]");
    if (r.ci_lower.has_value() != r.ci_upper.has_value()) fail("only one stability bound given");
    if (r.ci_lower && r.ci_upper) {
        const double lo = *r.ci_lower;
        const double hi = *r.ci_upper;
        if (!finite(lo) || !finite(hi)) fail("non-finite stability bound");
        if (!(0.0 <= lo && lo <= r.pp_top10 && r.pp_top10 <= hi && hi <= 1.0))
            fail("stability interval must satisfy 0 <= lower <= pp_top10 <= upper <= 1");
    }
}

// Which slice of a ranking export to keep. Unset fields match anything.
struct dataset_selector {
    std::optional<std::string> period;
    std::optional<std::string> field;
    std::optional<counting_method> counting;
    std::set<std::string> countries; // empty = all

    bool matches(const institution_record& r) const {
        if (period && r.period != *period) return false;
        if (field && r.field != *field) return false;
        if (counting && r.counting != *counting) return false;
        if (!countries.empty() && !countries.contains(r.country)) return false;
        return true;
    }
};

} // namespace ranksig
