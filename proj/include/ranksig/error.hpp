#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ranksig {

enum class errc {
    malformed_row,
    invariant_violation,
    no_match,
    duplicate_record,
    degenerate_table,
    zero_expected_cell,
    empty_pool,
    degenerate_pool,
    empty_institution,
    invalid_statistic,
    missing_interval,
    no_overlap,
    length_mismatch,
    constant_input,
    ambiguous_period_label,
    unknown_institution,
};

constexpr std::string_view to_string(errc code) noexcept {
    switch (code) {
    case errc::malformed_row: return "MalformedRow";
    case errc::invariant_violation: return "InvariantViolation";
    case errc::no_match: return "NoMatch";
    case errc::duplicate_record: return "DuplicateRecord";
    case errc::degenerate_table: return "DegenerateTable";
    case errc::zero_expected_cell: return "ZeroExpectedCell";
    case errc::empty_pool: return "EmptyPool";
    case errc::degenerate_pool: return "DegeneratePool";
    case errc::empty_institution: return "EmptyInstitution";
    case errc::invalid_statistic: return "InvalidStatistic";
    case errc::missing_interval: return "MissingInterval";
    case errc::no_overlap: return "NoOverlap";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::constant_input: return "ConstantInput";
    case errc::ambiguous_period_label: return "AmbiguousPeriodLabel";
    case errc::unknown_institution: return "UnknownInstitution";
    }
    return "Unknown";
}

// Every error raised by the library for bad input data. The CLI maps these to
// exit code 2.
class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

} // namespace ranksig
