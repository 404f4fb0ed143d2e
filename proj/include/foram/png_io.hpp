#pragma once

#include <string>

#include "foram/image.hpp"

namespace foram {

// Reads an 8-bit PNG (RGB, RGBA, gray or palette) and normalizes to RGB.
Image8 read_png(const std::string& path);

// Writes 8-bit RGB. The file appears atomically (temp file + rename).
void write_png(const std::string& path, const Image8& img);

}  // namespace foram
