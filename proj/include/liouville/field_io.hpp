#pragma once

// Binary field dumps: a 16-byte header (magic "LIOU", u32 n, u32 N,
// u32 reserved = 0) followed by N * n * n little-endian IEEE-754 doubles,
// component after component, each in row-major node order (index j*n + i).

#include <filesystem>

#include "liouville/energy.hpp"

namespace liouville {

void write_field_dump(const std::filesystem::path& path, const SystemField& field);
SystemField read_field_dump(const std::filesystem::path& path);

}  // namespace liouville
