#pragma once

#include <string>

namespace dynquant {

struct RenderOptions {
    int pixel_scale = 4;          // image is (nx*scale) x (ny*scale)
    bool fixed_colormap = false;  // scale colors over all frames in the directory
    std::string out_path;         // default: <dir>/frame_<K>.png
};

// Renders snapshot K of a simulation output directory: density under a
// perceptually-monotone colormap, Laguerre-cell boundaries as the grid edges
// where labels differ, atoms as dots.  Returns the written path.
std::string render_frame(const std::string& snapshot_dir, long frame, const RenderOptions& opt);

}  // namespace dynquant
