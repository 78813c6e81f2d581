#pragma once

#include <string>

#include "avshield/media.hpp"

namespace avshield {

// PNG in any bit depth / color type, expanded to RGB in [0,1].
PortraitImage load_png(const std::string& path);

// bit_depth 8 or 16; 16 keeps protected perturbations well below the
// quantization floor.
void save_png(const PortraitImage& img, const std::string& path, int bit_depth = 8);

} // namespace avshield
