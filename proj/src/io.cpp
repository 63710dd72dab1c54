#include "flexhca/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace flexhca {

using nlohmann::json;

std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string format_number(int v) { return std::to_string(v); }

void atomic_write(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(errc::config_error, "cannot open " + tmp + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error(errc::config_error, "short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_cell(const std::string& cell, int row, int col) {
    if (cell == "inf") return std::numeric_limits<double>::infinity();
    if (cell == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw Error(errc::malformed_csv, "non-numeric cell '" + cell + "' at data row " +
                                             std::to_string(row) + ", column " +
                                             std::to_string(col));
    return v;
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::config_error, "cannot open " + path);
    return in;
}

} // namespace

LoadSet load_csv(const std::string& path, const TimeGrid& grid) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line)) throw Error(errc::malformed_csv, "empty file " + path);

    const std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "slot")
        throw Error(errc::malformed_csv, "expected header `slot,bus_<id>,...` in " + path);

    LoadSet loads;
    loads.grid = grid;
    const int n_buses = static_cast<int>(header.size()) - 1;
    for (int i = 0; i < n_buses; ++i) {
        std::string col = header[i + 1];
        if (col.rfind("bus_", 0) == 0) col = col.substr(4);
        if (col.empty())
            throw Error(errc::malformed_csv, "empty bus column name in " + path);
        loads.bus_ids.push_back(col);
    }
    loads.values.resize(n_buses, grid.slot_count);

    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty() && in.eof()) break;
        if (row >= grid.slot_count)
            throw Error(errc::malformed_csv, "more than " + std::to_string(grid.slot_count) +
                                                 " data rows in " + path);
        const std::vector<std::string> cells = split_csv_line(line);
        if (static_cast<int>(cells.size()) != n_buses + 1)
            throw Error(errc::malformed_csv,
                        "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(n_buses + 1));
        if (parse_cell(cells[0], row, 0) != row)
            throw Error(errc::malformed_csv, "slot column must count 0.." +
                                                 std::to_string(grid.slot_count - 1) +
                                                 " in order; data row " + std::to_string(row) +
                                                 " says '" + cells[0] + "'");
        for (int i = 0; i < n_buses; ++i) {
            const double v = parse_cell(cells[i + 1], row, i + 1);
            if (!std::isfinite(v))
                throw Error(errc::malformed_csv, "non-finite load at data row " +
                                                     std::to_string(row));
            if (v < 0.0)
                throw Error(errc::negative_load,
                            "negative load at data row " + std::to_string(row) + ", bus " +
                                loads.bus_ids[i]);
            loads.values(i, row) = v;
        }
        ++row;
    }
    if (row != grid.slot_count)
        throw Error(errc::malformed_csv, "expected " + std::to_string(grid.slot_count) +
                                             " data rows, got " + std::to_string(row));
    return loads;
}

void write_csv(const LoadSet& loads, const std::string& path) {
    std::ostringstream out;
    out << "slot";
    for (const std::string& id : loads.bus_ids) out << ",bus_" << id;
    out << "\n";
    for (int t = 0; t < loads.slot_count(); ++t) {
        out << t;
        for (int i = 0; i < loads.bus_count(); ++i)
            out << ',' << format_number(loads.values(i, t));
        out << "\n";
    }
    atomic_write(path, out.str());
}

Eigen::VectorXd load_profile_csv(const std::string& path, const TimeGrid& grid) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line)) throw Error(errc::malformed_csv, "empty file " + path);
    const std::vector<std::string> header = split_csv_line(line);
    if (header.size() != 2 || header[0] != "slot" || header[1] != "lhat")
        throw Error(errc::malformed_csv, "expected header `slot,lhat` in " + path);

    Eigen::VectorXd profile(grid.slot_count);
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty() && in.eof()) break;
        if (row >= grid.slot_count)
            throw Error(errc::malformed_csv, "more than " + std::to_string(grid.slot_count) +
                                                 " data rows in " + path);
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != 2)
            throw Error(errc::malformed_csv, "row " + std::to_string(row) + " has " +
                                                 std::to_string(cells.size()) + " cells");
        if (parse_cell(cells[0], row, 0) != row)
            throw Error(errc::malformed_csv, "slot column must count 0.." +
                                                 std::to_string(grid.slot_count - 1) +
                                                 " in order; data row " + std::to_string(row) +
                                                 " says '" + cells[0] + "'");
        profile[row] = parse_cell(cells[1], row, 1);
        ++row;
    }
    if (row != grid.slot_count)
        throw Error(errc::malformed_csv, "expected " + std::to_string(grid.slot_count) +
                                             " data rows, got " + std::to_string(row));
    return profile;
}

void write_profile_csv(const Eigen::VectorXd& profile, const std::string& path) {
    std::ostringstream out;
    out << "slot,lhat\n";
    for (Eigen::Index t = 0; t < profile.size(); ++t)
        out << t << ',' << format_number(profile[t]) << "\n";
    atomic_write(path, out.str());
}

FeederModel load_feeder_json(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(errc::config_error, "bad feeder JSON in " + path + ": " + e.what());
    }

    FeederModel f;
    try {
        for (const auto& b : j.at("buses")) {
            if (b.is_string())
                f.bus_names.push_back(b.get<std::string>());
            else
                f.bus_names.push_back(std::to_string(b.get<long long>()));
        }
        for (const auto& l : j.at("lines")) {
            Line line;
            line.from = l.at("from").get<int>();
            line.to = l.at("to").get<int>();
            line.r = l.at("r").get<double>();
            line.x = l.at("x").get<double>();
            f.lines.push_back(line);
        }
        const int n = f.bus_count() - 1;

        const auto read_branch_vector = [&](const char* key, double broadcast_default,
                                            bool has_default) {
            Eigen::VectorXd v(n);
            if (!j.contains(key)) {
                if (!has_default)
                    throw Error(errc::config_error, std::string("feeder JSON missing ") + key);
                v.setConstant(broadcast_default);
                return v;
            }
            const json& jv = j.at(key);
            if (jv.is_number()) {
                v.setConstant(jv.get<double>());
            } else {
                if (static_cast<int>(jv.size()) != n)
                    throw Error(errc::config_error,
                                std::string(key) + " must have one entry per non-root bus");
                for (int i = 0; i < n; ++i) v[i] = jv.at(i).get<double>();
            }
            return v;
        };

        // eta may be a scalar, a per-bus vector, or a per-bus-per-slot matrix.
        const json& je = j.at("eta");
        if (je.is_number()) {
            f.eta = Eigen::MatrixXd::Constant(n, 1, je.get<double>());
        } else if (je.is_array() && !je.empty() && je.at(0).is_array()) {
            const int T = static_cast<int>(je.at(0).size());
            f.eta.resize(n, T);
            if (static_cast<int>(je.size()) != n)
                throw Error(errc::config_error, "eta matrix must have one row per non-root bus");
            for (int i = 0; i < n; ++i) {
                if (static_cast<int>(je.at(i).size()) != T)
                    throw Error(errc::config_error, "ragged eta matrix");
                for (int t = 0; t < T; ++t) f.eta(i, t) = je.at(i).at(t).get<double>();
            }
        } else {
            f.eta.resize(n, 1);
            if (static_cast<int>(je.size()) != n)
                throw Error(errc::config_error, "eta must have one entry per non-root bus");
            for (int i = 0; i < n; ++i) f.eta(i, 0) = je.at(i).get<double>();
        }

        f.v0 = j.value("v0", 1.0);
        f.v_lower = read_branch_vector("v_lower", 0.0, false);
        f.v_upper = read_branch_vector("v_upper", 0.0, false);
        f.p0_max_kw = j.at("p0_max_kw").get<double>();
        f.s_base_kva = j.value("s_base_kva", 1000.0);
    } catch (const json::exception& e) {
        throw Error(errc::config_error, "bad feeder JSON in " + path + ": " + e.what());
    }
    f.validate();
    return f;
}

void write_feeder_json(const FeederModel& feeder, const std::string& path) {
    json j;
    j["buses"] = feeder.bus_names;
    j["lines"] = json::array();
    for (const Line& l : feeder.lines)
        j["lines"].push_back({{"from", l.from}, {"to", l.to}, {"r", l.r}, {"x", l.x}});
    if (feeder.eta_stationary()) {
        std::vector<double> eta(feeder.eta.col(0).data(),
                                feeder.eta.col(0).data() + feeder.eta.rows());
        j["eta"] = eta;
    } else {
        std::vector<std::vector<double>> eta(feeder.eta.rows());
        for (Eigen::Index i = 0; i < feeder.eta.rows(); ++i)
            for (Eigen::Index t = 0; t < feeder.eta.cols(); ++t)
                eta[i].push_back(feeder.eta(i, t));
        j["eta"] = eta;
    }
    j["v0"] = feeder.v0;
    j["v_lower"] = std::vector<double>(feeder.v_lower.data(),
                                       feeder.v_lower.data() + feeder.v_lower.size());
    j["v_upper"] = std::vector<double>(feeder.v_upper.data(),
                                       feeder.v_upper.data() + feeder.v_upper.size());
    j["p0_max_kw"] = feeder.p0_max_kw;
    j["s_base_kva"] = feeder.s_base_kva;
    atomic_write(path, j.dump(2) + "\n");
}

void write_capacity_csv(const CapacitySeries& series, const std::string& path) {
    std::ostringstream out;
    out << "slot,c_res_kw,c_dyn_kw,rank\n";
    for (int t = 0; t < series.slot_count(); ++t) {
        out << t << ',' << format_number(series.c_res[t]) << ','
            << format_number(series.c_dyn[t]) << ',' << (series.rank_of[t] + 1) << "\n";
    }
    atomic_write(path, out.str());
}

} // namespace flexhca
