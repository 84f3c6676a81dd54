#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trajlab/raster.hpp"

namespace trajlab {

// Binary PGM (P5), maxval 255. This is the format of record: encode/decode
// round-trips bitwise.
std::vector<uint8_t> encode_pgm(const GrayImage& image);
GrayImage decode_pgm(std::span<const uint8_t> bytes);

void write_pgm(const GrayImage& image, const std::string& path);
GrayImage read_pgm(const std::string& path);

// 8-bit grayscale PNG (no alpha) for human viewing; uses stored deflate
// blocks so the encoder is dependency-free and deterministic.
std::vector<uint8_t> encode_png(const GrayImage& image);
void write_png(const GrayImage& image, const std::string& path);

} // namespace trajlab
