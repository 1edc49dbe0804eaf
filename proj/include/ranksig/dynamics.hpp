#pragma once

// Bootstrap stability intervals and change decomposition over time.

#include "ranksig/error.hpp"
#include "ranksig/record.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace ranksig {

// Per-institution random stream: std::mt19937_64 seeded with
// splitmix64(seed ^ fnv1a64(name)). Streams depend only on (seed, name).
inline std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::mt19937_64 institution_stream(std::uint64_t seed, std::string_view name) {
    return std::mt19937_64(splitmix64(seed ^ fnv1a64(name)));
}

struct stability_interval {
    double lower = 0.0;
    double upper = 0.0;
    double point = 0.0;
    std::size_t draws = 0;
    double coverage = 0.95;
    std::uint64_t seed = 0;
};

struct bootstrap_options {
    std::size_t draws = 1000;
    double coverage = 0.95;
    std::uint64_t seed = 0;
};

// Nearest-rank percentile of an ascending list, q in [0, 1].
inline double nearest_rank(const std::vector<double>& sorted, double q) {
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

// The replicate top shares themselves, unsorted.
inline std::vector<double> bootstrap_replicates(const institution_record& rec, const bootstrap_options& opt) {
    if (!(rec.p >= 1.0)) throw error(errc::empty_institution, "'" + rec.name + "' has fewer than one publication");
    if (opt.draws == 0) throw error(errc::invalid_statistic, "draws must be positive");
    const auto n = static_cast<std::uint64_t>(std::llround(rec.p));
    const double pp = rec.pp_top10;
    auto rng = institution_stream(opt.seed, rec.name);

    std::vector<double> shares;
    shares.reserve(opt.draws);
    for (std::size_t d = 0; d < opt.draws; ++d) {
        std::uint64_t top = 0;
        for (std::uint64_t k = 0; k < n; ++k) {
            // 53-bit uniform in [0, 1)
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            if (u < pp) ++top;
        }
        shares.push_back(static_cast<double>(top) / static_cast<double>(n));
    }
    return shares;
}

// Resamples round(P) publications, each in the top class with probability
// pp_top10, and reports the (1-coverage)/2 and 1-(1-coverage)/2 percentiles.
inline stability_interval bootstrap_interval(const institution_record& rec, const bootstrap_options& opt = {}) {
    if (!(opt.coverage > 0.0 && opt.coverage < 1.0)) throw error(errc::invalid_statistic, "coverage must lie in (0,1)");
    auto shares = bootstrap_replicates(rec, opt);
    std::sort(shares.begin(), shares.end());
    const double tail = (1.0 - opt.coverage) / 2.0;
    return {nearest_rank(shares, tail), nearest_rank(shares, 1.0 - tail), rec.pp_top10, opt.draws, opt.coverage, opt.seed};
}

// Intervals for many institutions; the result does not depend on `threads`.
inline std::vector<stability_interval> bootstrap_intervals(const std::vector<institution_record>& recs,
                                                           const bootstrap_options& opt, unsigned threads = 1) {
    std::vector<stability_interval> out(recs.size());
    std::vector<std::exception_ptr> failures(recs.size());
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(recs.size(), 1))));
    auto work = [&](unsigned w) {
        for (std::size_t i = w; i < recs.size(); i += threads) {
            try {
                out[i] = bootstrap_interval(recs[i], opt);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (auto& f : failures)
        if (f) std::rethrow_exception(f);
    return out;
}

// Change in an indicator split into the part due to new data (old value as
// published vs. old value recomputed with the current model) and the part due
// to the model (recomputed old value vs. current value). Values in percent.
struct change_decomposition {
    double reported_old = 0.0;
    double reconstructed_old = 0.0;
    double current = 0.0;
    double total = 0.0;
    double data_effect = 0.0;
    double model_effect = 0.0;
    std::optional<double> data_share;  // unset when total == 0
    std::optional<double> model_share;
};

inline change_decomposition decompose_change(double reported_old, double reconstructed_old, double current) {
    if (!std::isfinite(reported_old) || !std::isfinite(reconstructed_old) || !std::isfinite(current))
        throw error(errc::invalid_statistic, "decomposition inputs must be finite");
    change_decomposition d;
    d.reported_old = reported_old;
    d.reconstructed_old = reconstructed_old;
    d.current = current;
    d.data_effect = reported_old - reconstructed_old;
    d.model_effect = reconstructed_old - current;
    d.total = d.data_effect + d.model_effect;
    if (d.total != 0.0) {
        d.data_share = d.data_effect / d.total;
        d.model_share = d.model_effect / d.total;
    }
    return d;
}

// Leading four-digit year of a period label such as "2015-2018".
inline int period_start_year(std::string_view label) {
    std::size_t i = 0;
    while (i < label.size() && (label[i] == ' ' || label[i] == '\t')) ++i;
    int year = 0;
    std::size_t digits = 0;
    for (; i < label.size() && digits < 5 && label[i] >= '0' && label[i] <= '9'; ++i, ++digits)
        year = year * 10 + (label[i] - '0');
    if (digits != 4)
        throw error(errc::ambiguous_period_label, "cannot read a start year from '" + std::string(label) + "'");
    return year;
}

enum class series_value { p, t_top10, pp_top10 };

struct series_point {
    std::string period;
    int start_year = 0;
    double value = 0.0;
};

inline double value_of(const institution_record& r, series_value v) {
    switch (v) {
    case series_value::p: return r.p;
    case series_value::t_top10: return r.t_top10;
    case series_value::pp_top10: return r.pp_top10;
    }
    return 0.0;
}

// One institution's values ordered by period start year.
inline std::vector<series_point> series_view(const std::vector<institution_record>& records, series_value value) {
    if (records.empty()) throw error(errc::no_match, "no periods for the series");
    std::vector<series_point> out;
    for (const auto& r : records) out.push_back({r.period, period_start_year(r.period), value_of(r, value)});
    std::sort(out.begin(), out.end(), [](const series_point& a, const series_point& b) {
        if (a.start_year != b.start_year) return a.start_year < b.start_year;
        return a.period < b.period;
    });
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i].period == out[i - 1].period)
            throw error(errc::duplicate_record, "period '" + out[i].period + "' appears twice in the series");
    return out;
}

struct aligned_row {
    std::string period;
    int start_year = 0;
    std::optional<double> left;
    std::optional<double> right;
};

// Joins two series on the period label for side-by-side diffing.
inline std::vector<aligned_row> align_series(const std::vector<series_point>& left,
                                             const std::vector<series_point>& right) {
    std::map<std::pair<int, std::string>, aligned_row> rows;
    for (const auto& p : left) {
        auto& row = rows[{p.start_year, p.period}];
        row.period = p.period;
        row.start_year = p.start_year;
        row.left = p.value;
    }
    for (const auto& p : right) {
        auto& row = rows[{p.start_year, p.period}];
        row.period = p.period;
        row.start_year = p.start_year;
        row.right = p.value;
    }
    std::vector<aligned_row> out;
    for (auto& [key, row] : rows) out.push_back(std::move(row));
    return out;
}

} // namespace ranksig
