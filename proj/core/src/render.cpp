#include "dynquant/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "dynquant/io.hpp"
#include "dynquant/sdot.hpp"

namespace dynquant {

namespace {

struct Rgb {
    unsigned char r, g, b;
};

// Anchors of a perceptually-monotone (viridis) ramp.
constexpr double kViridis[9][3] = {
    {0.267004, 0.004874, 0.329415}, {0.282623, 0.140926, 0.457517},
    {0.253935, 0.265254, 0.529983}, {0.206756, 0.371758, 0.553117},
    {0.163625, 0.471133, 0.558148}, {0.127568, 0.566949, 0.550556},
    {0.134692, 0.658636, 0.517649}, {0.477504, 0.821444, 0.318195},
    {0.993248, 0.906157, 0.143936}};

Rgb colormap(double t) {
    t = std::clamp(t, 0.0, 1.0) * 8.0;
    const int k = std::min(7, static_cast<int>(t));
    const double f = t - k;
    auto ch = [&](int c) {
        const double v = kViridis[k][c] * (1.0 - f) + kViridis[k + 1][c] * f;
        return static_cast<unsigned char>(std::lround(255.0 * v));
    };
    return {ch(0), ch(1), ch(2)};
}

struct RawDensity {
    int nx = 0, ny = 0;
    std::vector<double> values;
};

RawDensity read_density_any(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open: " + path);
    RawDensity d;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        int count = 0;
        const char* s = line.c_str();
        while (*s) {
            char* end = nullptr;
            double v = std::strtod(s, &end);
            if (end == s) throw ConfigError(path + ": malformed density row");
            d.values.push_back(v);
            ++count;
            s = end;
            while (*s == ' ' || *s == '\t' || *s == ',' || *s == '\r') ++s;
        }
        if (d.nx == 0) d.nx = count;
        else if (count != d.nx) throw ConfigError(path + ": ragged density rows");
        ++d.ny;
    }
    if (d.nx == 0) throw ConfigError(path + ": empty density file");
    return d;
}

void write_png(const std::string& path, int width, int height,
               const std::vector<unsigned char>& rgb) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw ConfigError("cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw NumericalError("png encoding failed");
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(&rgb[static_cast<std::size_t>(y) * width * 3]);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

std::string frame_name(long frame) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06ld", frame);
    return buf;
}

}  // namespace

std::string render_frame(const std::string& dir, long frame, const RenderOptions& opt) {
    const std::string stem = frame_name(frame);
    const std::string density_path = dir + "/density_" + stem + ".csv";
    const std::string atoms_path = dir + "/atoms_" + stem + ".csv";
    if (!std::filesystem::exists(density_path))
        throw ConfigError("missing frame: " + density_path);

    RawDensity d = read_density_any(density_path);

    // Domain from grid.txt when the run emitted one, else the unit square.
    Domain dom(0.0, 1.0, 0.0, 1.0);
    {
        std::ifstream g(dir + "/grid.txt");
        int nx, ny;
        double a, b, c, e;
        if (g >> nx >> ny >> a >> b >> c >> e) dom = Domain(a, b, c, e);
    }
    const Grid grid(dom, d.nx, d.ny);
    Density density(grid, d.values);

    double lo = density.min_value(), hi = density.max_value();
    if (opt.fixed_colormap) {
        lo = std::numeric_limits<double>::infinity();
        hi = -lo;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("density_", 0) != 0 || entry.path().extension() != ".csv") continue;
            RawDensity other = read_density_any(entry.path().string());
            for (double v : other.values) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    const double span = hi > lo ? hi - lo : 1.0;

    AtomSet atoms;
    Tessellation tess;
    bool have_labels = false;
    if (std::filesystem::exists(atoms_path)) {
        std::ifstream f(atoms_path);
        std::string line;
        std::getline(f, line);  // header
        int lineno = 1;
        std::vector<double> psi;
        while (std::getline(f, line)) {
            ++lineno;
            if (line.empty()) continue;
            std::vector<std::string> fields;
            std::string field;
            std::stringstream ss(line);
            while (std::getline(ss, field, ',')) fields.push_back(field);
            while (fields.size() < 8) fields.push_back("");
            atoms.positions.push_back(
                {std::atof(fields[1].c_str()), std::atof(fields[2].c_str())});
            atoms.weights.push_back(std::atof(fields[3].c_str()));
            atoms.alive.push_back(std::atoi(fields[4].c_str()) != 0 ? 1 : 0);
            psi.push_back(fields[5].empty() ? 0.0 : std::atof(fields[5].c_str()));
        }
        if (atoms.alive_count() > 0) {
            tess.labels = assign_cells(grid, atoms, psi);
            have_labels = true;
        }
    }

    const int s = std::max(1, opt.pixel_scale);
    const int width = d.nx * s, height = d.ny * s;
    std::vector<unsigned char> img(static_cast<std::size_t>(width) * height * 3);

    auto put = [&](int px, int py, Rgb c) {
        if (px < 0 || px >= width || py < 0 || py >= height) return;
        const std::size_t o = (static_cast<std::size_t>(py) * width + px) * 3;
        img[o] = c.r;
        img[o + 1] = c.g;
        img[o + 2] = c.b;
    };

    for (int j = 0; j < d.ny; ++j) {
        for (int i = 0; i < d.nx; ++i) {
            const Rgb c = colormap((density.at(i, j) - lo) / span);
            const int py0 = (d.ny - 1 - j) * s;  // y increases upward
            for (int dy = 0; dy < s; ++dy)
                for (int dx = 0; dx < s; ++dx) put(i * s + dx, py0 + dy, c);
        }
    }

    if (have_labels) {
        const Rgb edge{20, 20, 20};
        for (int j = 0; j < d.ny; ++j)
            for (int i = 0; i < d.nx; ++i) {
                const int32_t lab = tess.labels[grid.index(i, j)];
                const int py0 = (d.ny - 1 - j) * s;
                if (i + 1 < d.nx && tess.labels[grid.index(i + 1, j)] != lab)
                    for (int dy = 0; dy < s; ++dy) put((i + 1) * s - 1, py0 + dy, edge);
                if (j + 1 < d.ny && tess.labels[grid.index(i, j + 1)] != lab)
                    for (int dx = 0; dx < s; ++dx) put(i * s + dx, py0, edge);
            }
        const Rgb dot{235, 60, 40};
        const int r = std::max(2, s / 2);
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            if (!atoms.alive[k]) continue;
            const double fx = (atoms.positions[k].x - dom.x_min) / dom.width();
            const double fy = (atoms.positions[k].y - dom.y_min) / dom.height();
            const int px = static_cast<int>(fx * width);
            const int py = height - 1 - static_cast<int>(fy * height);
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    if (dx * dx + dy * dy <= r * r) put(px + dx, py + dy, dot);
        }
    }

    const std::string out =
        opt.out_path.empty() ? dir + "/frame_" + stem + ".png" : opt.out_path;
    write_png(out, width, height, img);
    return out;
}

}  // namespace dynquant
