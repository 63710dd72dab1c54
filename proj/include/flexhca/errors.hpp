#pragma once

#include <stdexcept>
#include <string>

namespace flexhca {

enum class errc {
    malformed_csv,
    negative_load,
    infeasible_scaling,
    rank_out_of_range,
    not_a_tree,
    disconnected_bus,
    nonpositive_mutual_impedance,
    upper_bound_unsafe,
    infeasible,
    nonnegativity_violated,
    event_near_horizon_end,
    lp_numerical_failure,
    degenerate_tail,
    degenerate_range,
    config_error,
};

const char* errc_name(errc code);

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const { return code_; }

private:
    errc code_;
};

} // namespace flexhca
