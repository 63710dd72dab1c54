#pragma once

#include <string>

#include "flexhca/capacity.hpp"
#include "flexhca/types.hpp"

namespace flexhca {

// Shortest round-trip decimal form; "inf" for infinities. Used everywhere a
// number is written so byte-identical output only depends on the values.
std::string format_number(double v);
std::string format_number(int v);

// Loads CSV: header `slot,bus_<id>,...`, exactly T data rows, slot column
// counts 0..T-1.
LoadSet load_csv(const std::string& path, const TimeGrid& grid);
void write_csv(const LoadSet& loads, const std::string& path);

// Profile CSV: header `slot,lhat`. attach_bus travels in the run config.
Eigen::VectorXd load_profile_csv(const std::string& path, const TimeGrid& grid);
void write_profile_csv(const Eigen::VectorXd& profile, const std::string& path);

// Feeder JSON with keys buses, lines[{from,to,r,x}], eta, v0, v_lower,
// v_upper, p0_max_kw and optional s_base_kva.
FeederModel load_feeder_json(const std::string& path);
void write_feeder_json(const FeederModel& feeder, const std::string& path);

// Per-slot dump `slot,c_res_kw,c_dyn_kw,rank` (rank 1-based).
void write_capacity_csv(const CapacitySeries& series, const std::string& path);

// All writers go through this: write to a temp sibling, then rename.
void atomic_write(const std::string& path, const std::string& contents);

} // namespace flexhca
