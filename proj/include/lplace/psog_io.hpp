#pragma once

#include <filesystem>
#include <iosfwd>

#include "lplace/grid.hpp"

namespace lplace {

/// Binary P-SOG layout, all little-endian:
///
///   "PSOG" | version u32 | n_l n_w n_h u32 | res_l res_w res_h f64 |
///   origin 3 x f64 | M u16 | empty_class u16 | T u64 |
///   N*M u32 counts (voxel-major with i_l fastest, class-minor) |
///   M class names, each as u32 byte length followed by UTF-8 bytes.
inline constexpr std::uint32_t kPsogVersion = 1;

void write_psog(std::ostream& out, const PSog& psog);
PSog read_psog(std::istream& in);

/// Writes to a sibling temporary file and renames it over `path`.
void save_psog(const std::filesystem::path& path, const PSog& psog);
PSog load_psog(const std::filesystem::path& path);

}  // namespace lplace
