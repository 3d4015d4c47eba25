#pragma once

#include <filesystem>
#include <iosfwd>

#include "ppac/volume.hpp"

namespace ppac {

// On-disk layout: one UTF-8 JSON header line
//   {"dims":[x,y,z],"spacing":[sx,sy,sz],"dtype":"f32le","landmarks":{"name":[px,py,pz],...}}
// terminated by '\n', followed by x*y*z little-endian float32 values in
// x-fastest, then y, then z order. Nothing may follow the payload.

void write_volume(std::ostream& out, const Volume& v);
Volume read_volume(std::istream& in);

void save_volume(const Volume& v, const std::filesystem::path& path);
Volume load_volume(const std::filesystem::path& path);

} // namespace ppac
