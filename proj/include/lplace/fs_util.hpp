#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <system_error>

#include "lplace/errors.hpp"

namespace lplace {

/// Runs `writer` against "<path>.tmp" and renames the result onto `path`, so
/// readers never observe a partially written file.
inline void write_atomically(const std::filesystem::path& path,
                             const std::function<void(std::ostream&)>& writer,
                             std::ios::openmode mode = std::ios::out) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  std::error_code ec;
  try {
    std::ofstream out(tmp, mode | std::ios::out | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    writer(out);
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  } catch (...) {
    std::filesystem::remove(tmp, ec);
    throw;
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot rename onto " + path.string());
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace lplace
