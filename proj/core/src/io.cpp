#include "dynquant/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dynquant {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::vector<double> parse_number_line(const std::string& line, const std::string& path,
                                      int lineno) {
    std::vector<double> out;
    const char* s = line.c_str();
    while (*s) {
        char* end = nullptr;
        double v = std::strtod(s, &end);
        if (end == s) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected number");
        out.push_back(v);
        s = end;
        while (*s == ' ' || *s == '\t') ++s;
        if (*s == ',') ++s;
        while (*s == ' ' || *s == '\t' || *s == '\r') ++s;
    }
    return out;
}

}  // namespace

void write_density_csv(const std::string& path, const Density& d) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open for writing: " + path);
    const Grid& g = d.grid();
    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            if (i) f << ',';
            f << format_double(d.at(i, j));
        }
        f << '\n';
    }
}

Density read_density_csv(const std::string& path, const Grid& grid) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open: " + path);
    std::vector<double> values;
    values.reserve(grid.cell_count());
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto row = parse_number_line(line, path, lineno);
        if (static_cast<int>(row.size()) != grid.nx())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(grid.nx()) + " values, got " +
                              std::to_string(row.size()));
        values.insert(values.end(), row.begin(), row.end());
    }
    if (values.size() != grid.cell_count())
        throw ConfigError(path + ": expected " + std::to_string(grid.ny()) + " rows");
    return Density(grid, std::move(values));
}

void write_density1d_csv(const std::string& path, const std::vector<double>& values) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open for writing: " + path);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) f << ',';
        f << format_double(values[i]);
    }
    f << '\n';
}

std::vector<double> read_density1d_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open: " + path);
    std::string line;
    while (std::getline(f, line) && line.empty()) {
    }
    if (line.empty()) throw ConfigError(path + ": empty 1d density file");
    return parse_number_line(line, path, 1);
}

void write_atoms_csv(const std::string& path, const AtomSet& atoms, const Tessellation* tess) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open for writing: " + path);
    f << "id,x,y,a,alive,psi,bx,by\n";
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        f << i << ',' << format_double(atoms.positions[i].x) << ','
          << format_double(atoms.positions[i].y) << ',' << format_double(atoms.weights[i]) << ','
          << (atoms.alive[i] ? 1 : 0) << ',';
        if (atoms.alive[i] && tess) {
            f << format_double(tess->potentials[i]) << ','
              << format_double(tess->barycenters[i].x) << ','
              << format_double(tess->barycenters[i].y);
        } else {
            f << ",,";
        }
        f << '\n';
    }
}

AtomSet read_atoms_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line)) throw ConfigError(path + ": empty atoms file");
    AtomSet atoms;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 5)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected >= 5 fields");
        atoms.positions.push_back({std::atof(fields[1].c_str()), std::atof(fields[2].c_str())});
        atoms.weights.push_back(std::atof(fields[3].c_str()));
        atoms.alive.push_back(std::atoi(fields[4].c_str()) != 0 ? 1 : 0);
    }
    return atoms;
}

}  // namespace dynquant
