#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "flexhca/errors.hpp"

namespace flexhca {

// Uniform planning-horizon grid. Slots are 0-indexed; timestamps are opaque
// metadata and never enter any computation.
struct TimeGrid {
    int slot_count = 0;
    int slot_minutes = 15;
    std::string start_label;

    TimeGrid() = default;
    TimeGrid(int slots, int minutes = 15, std::string label = {})
        : slot_count(slots), slot_minutes(minutes), start_label(std::move(label)) {
        if (slot_count < 1) throw Error(errc::config_error, "slot_count must be >= 1");
        if (slot_minutes < 1) throw Error(errc::config_error, "slot_minutes must be >= 1");
    }

    int slots_per_day() const { return 1440 / slot_minutes; }
};

// Existing real-power load per bus, kW. Row i = bus i, column t = slot t.
struct LoadSet {
    TimeGrid grid;
    Eigen::MatrixXd values;            // buses x slots, kW
    std::vector<std::string> bus_ids;  // row labels

    int bus_count() const { return static_cast<int>(values.rows()); }
    int slot_count() const { return grid.slot_count; }

    Eigen::VectorXd aggregate() const { return values.colwise().sum().transpose(); }

    void validate() const;
};

// Normalized profile of the new load plus the attachment bus.
struct NewLoadSpec {
    Eigen::VectorXd profile;  // lhat, in [0,1], length T
    std::string attach_bus;

    void validate(const TimeGrid& grid) const;
};

struct Line {
    int from = 0;
    int to = 0;
    double r = 0.0;  // p.u.
    double x = 0.0;  // p.u.
};

// Radial feeder description. Bus 0 is the substation; per-unit impedances are
// converted to p.u.-voltage-per-kW via s_base_kva.
struct FeederModel {
    std::vector<std::string> bus_names;  // index 0 = root
    std::vector<Line> lines;
    Eigen::MatrixXd eta;      // n x 1 (stationary) or n x T, reactive/real ratio per non-root bus
    double v0 = 1.0;          // substation voltage magnitude, p.u.
    Eigen::VectorXd v_lower;  // per non-root bus, p.u.
    Eigen::VectorXd v_upper;  // per non-root bus, p.u.
    double p0_max_kw = 0.0;   // transformer real-power limit
    double s_base_kva = 1000.0;  // power base bridging p.u. impedances and kW injections

    int bus_count() const { return static_cast<int>(bus_names.size()); }
    int branch_bus_count() const { return bus_count() - 1; }
    bool eta_stationary() const { return eta.cols() <= 1; }

    // -1 if not found
    int bus_index(const std::string& name) const;

    void validate() const;
};

} // namespace flexhca
