#include "flexhca/errors.hpp"

namespace flexhca {

const char* errc_name(errc code) {
    switch (code) {
        case errc::malformed_csv: return "MalformedCsv";
        case errc::negative_load: return "NegativeLoad";
        case errc::infeasible_scaling: return "InfeasibleScaling";
        case errc::rank_out_of_range: return "RankOutOfRange";
        case errc::not_a_tree: return "NotATree";
        case errc::disconnected_bus: return "DisconnectedBus";
        case errc::nonpositive_mutual_impedance: return "NonpositiveMutualImpedance";
        case errc::upper_bound_unsafe: return "UpperBoundUnsafe";
        case errc::infeasible: return "Infeasible";
        case errc::nonnegativity_violated: return "NonnegativityViolated";
        case errc::event_near_horizon_end: return "EventNearHorizonEnd";
        case errc::lp_numerical_failure: return "LpNumericalFailure";
        case errc::degenerate_tail: return "DegenerateTail";
        case errc::degenerate_range: return "DegenerateRange";
        case errc::config_error: return "ConfigError";
    }
    return "UnknownError";
}

} // namespace flexhca
