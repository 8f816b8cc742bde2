#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdstab/harness/pipeline.hpp"

namespace sdstab::harness {

class MissingSeries : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline const std::vector<std::string>& csv_series_names() {
    static const std::vector<std::string> names{"trajectory", "scan_c", "scan_d", "powerbound"};
    return names;
}

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// CSV text for one series; the first column is non-decreasing.
inline std::string csv_text(const StabilityReport& rep, const std::string& which) {
    using detail::fmt;
    std::string out;
    auto missing = [&] { return MissingSeries("emit_csv: report has no " + which + " series"); };
    if (which == "trajectory") {
        if (!rep.trajectory) throw missing();
        out = "t,norm\n";
        for (const auto& p : *rep.trajectory) out += fmt(p.t) + "," + fmt(p.norm) + "\n";
    } else if (which == "scan_c") {
        if (!rep.scan_c) throw missing();
        out = "omega,abs_1mG\n";
        for (const auto& p : *rep.scan_c) out += fmt(p.x) + "," + fmt(p.y) + "\n";
    } else if (which == "scan_d") {
        if (!rep.scan_d) throw missing();
        out = "theta,abs_1mFRS\n";
        for (const auto& p : *rep.scan_d) out += fmt(p.x) + "," + fmt(p.y) + "\n";
    } else if (which == "powerbound") {
        if (!rep.powerbound) throw missing();
        out = "r,integral_value,vector_index,adjoint\n";
        for (const auto& p : *rep.powerbound)
            out += fmt(p.r) + "," + fmt(p.integral_value) + "," + std::to_string(p.vector_index) + "," +
                   (p.adjoint ? "1" : "0") + "\n";
    } else {
        throw std::invalid_argument("emit_csv: unknown series " + which);
    }
    return out;
}

/// Writes `<dir>/<which>.csv` and returns its path.
inline std::filesystem::path emit_csv(const StabilityReport& rep, const std::string& which,
                                      const std::filesystem::path& dir) {
    const auto text = csv_text(rep, which);
    std::filesystem::create_directories(dir);
    const auto path = dir / (which + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_csv: cannot write " + path.string());
    out << text;
    return path;
}

} // namespace sdstab::harness
