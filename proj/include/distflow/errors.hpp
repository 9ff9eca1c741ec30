#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace distflow {

/// Failure categories surfaced by the library. Each maps to one validation
/// or solver-level failure mode; the CLI turns them into structured messages.
enum class errc {
    cycle_detected,
    disconnected,
    duplicate_branch,
    bad_root,
    unknown_bus,
    nonpositive_voltage,
    zero_count,
    not_converged,
    singular_network,
    negative_squared_voltage,
    singular_system,
    already_violated,
    nonpositive_denominator,
    not_leaf,
    negative_critical_power,
    parse_error,
    unit_ambiguity,
    non_radial,
    coefficient_sum_error,
    nonpositive_power,
};

inline std::string_view to_string(errc c) {
    switch (c) {
        case errc::cycle_detected: return "cycle_detected";
        case errc::disconnected: return "disconnected";
        case errc::duplicate_branch: return "duplicate_branch";
        case errc::bad_root: return "bad_root";
        case errc::unknown_bus: return "unknown_bus";
        case errc::nonpositive_voltage: return "nonpositive_voltage";
        case errc::zero_count: return "zero_count";
        case errc::not_converged: return "not_converged";
        case errc::singular_network: return "singular_network";
        case errc::negative_squared_voltage: return "negative_squared_voltage";
        case errc::singular_system: return "singular_system";
        case errc::already_violated: return "already_violated";
        case errc::nonpositive_denominator: return "nonpositive_denominator";
        case errc::not_leaf: return "not_leaf";
        case errc::negative_critical_power: return "negative_critical_power";
        case errc::parse_error: return "parse_error";
        case errc::unit_ambiguity: return "unit_ambiguity";
        case errc::non_radial: return "non_radial";
        case errc::coefficient_sum_error: return "coefficient_sum_error";
        case errc::nonpositive_power: return "nonpositive_power";
    }
    return "unknown";
}

/// Exception carrying an errc tag alongside the human-readable message.
class error : public std::runtime_error {
public:
    error(errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& message) {
    throw error(code, message);
}

}  // namespace distflow
