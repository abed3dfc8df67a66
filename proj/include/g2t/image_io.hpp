#pragma once

#include <atomic>
#include <string>

#include "g2t/types.hpp"

namespace g2t {

// Global count of file operations performed through this module. The raster
// benchmark samples it around its timed region to prove the region is I/O
// free.
long io_op_count();
void io_op_reset();
void io_op_note();  // called by every module that touches a file

// Binary PPM (P6, maxval 255). Values are clamped to [0,1] and rounded
// half-to-even on write; read returns values in [0,1].
void write_ppm(const std::string& path, const Image& rgb);
Image read_ppm(const std::string& path);

// Portable Float Map, single channel ("Pf"). Scale line -1.0 means
// little-endian payload, positive means big-endian; rows are stored
// bottom-to-top. f32 payloads round-trip bit-exactly.
void write_pfm(const std::string& path, const Image& map);
Image read_pfm(const std::string& path);

}  // namespace g2t
