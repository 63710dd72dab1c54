#pragma once

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "flexhca/capacity.hpp"
#include "flexhca/errors.hpp"
#include "flexhca/rng.hpp"
#include "flexhca/types.hpp"

// Asserts that an expression throws flexhca::Error with a specific code.
#define CHECK_ERRC(expr, expected)                                          \
    do {                                                                    \
        bool caught_ = false;                                               \
        try {                                                               \
            (void)(expr);                                                   \
        } catch (const flexhca::Error& e_) {                                \
            caught_ = true;                                                 \
            CHECK_MESSAGE(e_.code() == flexhca::errc::expected, e_.what()); \
        }                                                                   \
        CHECK_MESSAGE(caught_, #expr " did not throw");                     \
    } while (0)

namespace flexhca::testing {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline CapacitySeries series_of(std::vector<double> c_res, std::vector<double> lhat) {
    return make_capacity_series(std::move(c_res), std::move(lhat));
}

inline LoadSet single_bus_loads(const std::vector<double>& agg, int slot_minutes = 15) {
    LoadSet loads;
    loads.grid = TimeGrid(static_cast<int>(agg.size()), slot_minutes);
    loads.values.resize(1, static_cast<Eigen::Index>(agg.size()));
    for (std::size_t t = 0; t < agg.size(); ++t) loads.values(0, static_cast<Eigen::Index>(t)) = agg[t];
    loads.bus_ids = {"1"};
    return loads;
}

inline NewLoadSpec spec_of(const std::vector<double>& lhat, std::string bus = "1") {
    NewLoadSpec spec;
    spec.profile = Eigen::Map<const Eigen::VectorXd>(lhat.data(), static_cast<Eigen::Index>(lhat.size()));
    spec.attach_bus = std::move(bus);
    return spec;
}

// Random bounded instance for property tests; zero-lhat slots appear with
// probability ~0.15 when allowed so the +inf branch gets exercised.
inline CapacitySeries random_series(std::mt19937_64& rng, int slots, bool allow_zero_lhat) {
    std::vector<double> c_res(slots), lhat(slots);
    for (int t = 0; t < slots; ++t) {
        c_res[t] = uniform(rng, 0.0, 10.0);
        lhat[t] = (allow_zero_lhat && uniform01(rng) < 0.15) ? 0.0 : uniform(rng, 0.05, 1.0);
    }
    return make_capacity_series(std::move(c_res), std::move(lhat));
}

// Unique-enough scratch path; each test passes a name distinct within its
// binary and binaries get distinct subdirectories.
inline std::string scratch_file(const std::string& subdir, const std::string& name) {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "flexhca_tests" / subdir;
    fs::create_directories(dir);
    return (dir / name).string();
}

inline bool exactly_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

} // namespace flexhca::testing
