#include "lplace/psog_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "lplace/fs_util.hpp"

namespace lplace {
namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> raw{};
  std::uint64_t bits = 0;
  if constexpr (std::is_floating_point_v<T>) {
    static_assert(sizeof(T) == 8);
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) raw[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(raw.data()), raw.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> raw{};
  if (!in.read(reinterpret_cast<char*>(raw.data()), raw.size()))
    throw ParseError("P-SOG stream truncated");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(raw[i]) << (8 * i);
  if constexpr (std::is_floating_point_v<T>)
    return std::bit_cast<double>(bits);
  else
    return static_cast<T>(bits);
}

}  // namespace

void write_psog(std::ostream& out, const PSog& psog) {
  const RoiGrid& g = psog.grid();
  const ClassTable& classes = psog.classes();
  out.write("PSOG", 4);
  put_le<std::uint32_t>(out, kPsogVersion);
  for (int a = 0; a < 3; ++a) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.dims[a]));
  for (int a = 0; a < 3; ++a) put_le<double>(out, g.resolution[a]);
  for (int a = 0; a < 3; ++a) put_le<double>(out, g.origin[a]);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(classes.size()));
  put_le<std::uint16_t>(out, classes.empty_class_id);
  put_le<std::uint64_t>(out, psog.frames_seen());
  for (std::uint32_t c : psog.dense_counts()) put_le<std::uint32_t>(out, c);
  for (const auto& name : classes.names) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  if (!out) throw Error("failed writing P-SOG stream");
}

PSog read_psog(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "PSOG", 4) != 0)
    throw ParseError("not a P-SOG file (bad magic)");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kPsogVersion)
    throw ParseError("unsupported P-SOG version " + std::to_string(version));

  RoiGrid grid;
  for (int a = 0; a < 3; ++a) {
    const auto n = get_le<std::uint32_t>(in);
    if (n == 0 || n > (1u << 24)) throw ParseError("bad grid dimension in P-SOG header");
    grid.dims[a] = static_cast<int>(n);
  }
  for (int a = 0; a < 3; ++a) grid.resolution[a] = get_le<double>(in);
  for (int a = 0; a < 3; ++a) grid.origin[a] = get_le<double>(in);
  try {
    grid.validate();
  } catch (const ConfigError& e) {
    throw ParseError(std::string("bad P-SOG grid: ") + e.what());
  }

  ClassTable classes;
  const auto m = get_le<std::uint16_t>(in);
  classes.empty_class_id = get_le<std::uint16_t>(in);
  const auto frames = get_le<std::uint64_t>(in);

  std::vector<std::uint32_t> counts(grid.voxel_count() * m);
  for (auto& c : counts) c = get_le<std::uint32_t>(in);
  classes.names.resize(m);
  for (auto& name : classes.names) {
    const auto len = get_le<std::uint32_t>(in);
    if (len > (1u << 16)) throw ParseError("class name too long");
    name.resize(len);
    if (len > 0 && !in.read(name.data(), len)) throw ParseError("P-SOG stream truncated in class names");
  }
  try {
    classes.validate();
  } catch (const ConfigError& e) {
    throw ParseError(std::string("bad P-SOG class table: ") + e.what());
  }
  return PSog::from_counts(std::move(grid), std::move(classes), frames, counts);
}

void save_psog(const std::filesystem::path& path, const PSog& psog) {
  write_atomically(path, [&](std::ostream& out) { write_psog(out, psog); }, std::ios::binary);
}

PSog load_psog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open P-SOG file " + path.string());
  return read_psog(in);
}

}  // namespace lplace
