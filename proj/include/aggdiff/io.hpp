#pragma once

// CSV serialization of radial densities. Format: header "r,rho", one row per
// grid node giving the face radius and the cell value to its right; the last
// row carries the outer face with rho = 0. Values are written with 17
// significant digits so densities round-trip exactly.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aggdiff/density.hpp"

namespace aggdiff {

inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_density_csv(std::ostream& out, const RadialDensity& rho) {
    out << "r,rho\n";
    for (int j = 0; j < rho.cells(); ++j)
        out << format_g17(rho.face(j)) << ',' << format_g17(rho.value(j))
            << '\n';
    out << format_g17(rho.face(rho.cells())) << ",0\n";
}

inline void write_density_csv(const std::string& path,
                              const RadialDensity& rho) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_density_csv: cannot open " + path);
    write_density_csv(out, rho);
}

inline RadialDensity read_density_csv(std::istream& in, int dim) {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("read_density_csv: empty input");
    // tolerate an optional header row
    auto looks_numeric = [](const std::string& s) {
        const auto pos = s.find_first_not_of(" \t");
        if (pos == std::string::npos) return false;
        const char c = s[pos];
        return (c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.';
    };
    std::vector<double> faces, values;
    auto parse_row = [&](const std::string& row) {
        const auto comma = row.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("read_density_csv: malformed row: " +
                                     row);
        std::size_t used = 0;
        const double r = std::stod(row.substr(0, comma), &used);
        const double v = std::stod(row.substr(comma + 1), &used);
        faces.push_back(r);
        values.push_back(v);
    };
    if (looks_numeric(line)) parse_row(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        parse_row(line);
    }
    if (faces.size() < 2)
        throw std::runtime_error("read_density_csv: need at least two rows");
    values.pop_back();  // last row is the outer face, value column unused
    return RadialDensity(dim, faces, values);
}

inline RadialDensity read_density_csv(const std::string& path, int dim) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("read_density_csv: cannot open " + path);
    return read_density_csv(in, dim);
}

}  // namespace aggdiff
