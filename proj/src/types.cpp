#include "flexhca/types.hpp"

#include <cmath>
#include <vector>

namespace flexhca {

void LoadSet::validate() const {
    if (values.cols() != grid.slot_count)
        throw Error(errc::malformed_csv, "load columns (" + std::to_string(values.cols()) +
                                             ") do not match grid slot count (" +
                                             std::to_string(grid.slot_count) + ")");
    if (static_cast<int>(bus_ids.size()) != values.rows())
        throw Error(errc::config_error, "bus id count does not match load rows");
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index t = 0; t < values.cols(); ++t) {
            const double v = values(i, t);
            if (!std::isfinite(v))
                throw Error(errc::malformed_csv, "non-finite load at bus row " +
                                                     std::to_string(i) + ", slot " +
                                                     std::to_string(t));
            if (v < 0.0)
                throw Error(errc::negative_load, "negative load at bus row " +
                                                     std::to_string(i) + ", slot " +
                                                     std::to_string(t));
        }
    }
}

void NewLoadSpec::validate(const TimeGrid& grid) const {
    if (profile.size() != grid.slot_count)
        throw Error(errc::config_error, "profile length (" + std::to_string(profile.size()) +
                                            ") does not match grid slot count (" +
                                            std::to_string(grid.slot_count) + ")");
    for (Eigen::Index t = 0; t < profile.size(); ++t) {
        const double v = profile[t];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw Error(errc::config_error,
                        "profile value out of [0,1] at slot " + std::to_string(t));
    }
}

int FeederModel::bus_index(const std::string& name) const {
    for (int i = 0; i < bus_count(); ++i)
        if (bus_names[i] == name) return i;
    return -1;
}

void FeederModel::validate() const {
    const int nb = bus_count();
    if (nb < 2) throw Error(errc::config_error, "feeder needs the root and at least one bus");
    const int n = nb - 1;
    if (static_cast<int>(lines.size()) != n)
        throw Error(errc::not_a_tree, "a radial feeder with " + std::to_string(nb) +
                                          " buses needs exactly " + std::to_string(n) +
                                          " lines, got " + std::to_string(lines.size()));
    for (const Line& l : lines) {
        if (l.from < 0 || l.from >= nb || l.to < 0 || l.to >= nb)
            throw Error(errc::config_error, "line endpoint out of range");
        if (l.r < 0.0 || l.x < 0.0)
            throw Error(errc::config_error, "negative line impedance");
    }
    if (eta.rows() != n)
        throw Error(errc::config_error, "eta rows must equal non-root bus count");
    if (v_lower.size() != n || v_upper.size() != n)
        throw Error(errc::config_error, "voltage bounds must cover every non-root bus");
    for (int i = 0; i < n; ++i) {
        if (!(v_lower[i] < v0))
            throw Error(errc::config_error, "v_lower must be below v0 at bus index " +
                                                std::to_string(i + 1));
        if (v_upper[i] < v0)
            throw Error(errc::upper_bound_unsafe,
                        "v_upper below v0 at bus index " + std::to_string(i + 1) +
                            "; with load-only injections voltages stay at or below v0, so "
                            "an upper bound under v0 cannot be certified");
    }
    if (!(p0_max_kw > 0.0)) throw Error(errc::config_error, "p0_max_kw must be positive");
    if (!(s_base_kva > 0.0)) throw Error(errc::config_error, "s_base_kva must be positive");
}

} // namespace flexhca
