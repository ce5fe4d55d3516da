#pragma once

#include <cstdint>
#include <string>

namespace satrach {

// Shortest float formatting that round-trips a double, used by every CSV
// writer so artifacts are byte-stable.
std::string fmt_double(double v);

// FNV-1a over a file's bytes, as 16 hex digits. Used for manifest checksums.
std::string file_checksum(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace satrach
