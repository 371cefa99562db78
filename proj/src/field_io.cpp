#include "liouville/field_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "liouville/error.hpp"

namespace liouville {

namespace {

constexpr std::array<char, 4> kMagic = {'L', 'I', 'O', 'U'};

template <typename T>
void put_le(std::ostream& os, T value) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  os.write(reinterpret_cast<const char*>(bits.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bits{};
  is.read(reinterpret_cast<char*>(bits.data()), sizeof(T));
  if (!is) throw InvalidInput("field dump is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_field_dump(const std::filesystem::path& path, const SystemField& field) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InvalidInput(fmt::format("cannot open {} for writing", path.string()));
  os.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(field.grid().n()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(field.components()));
  put_le<std::uint32_t>(os, 0u);
  for (int i = 0; i < field.components(); ++i) {
    for (double v : field[i].values()) put_le<double>(os, v);
  }
  if (!os) throw InvalidInput(fmt::format("failed writing {}", path.string()));
}

SystemField read_field_dump(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput(fmt::format("cannot open field dump {}", path.string()));
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw InvalidInput(fmt::format("{} is not a LIOU field dump", path.string()));
  const auto n = get_le<std::uint32_t>(is);
  const auto comps = get_le<std::uint32_t>(is);
  (void)get_le<std::uint32_t>(is);
  if (n > (1u << 14) || comps < 1 || comps > 16) {
    throw InvalidInput(fmt::format("field dump header is implausible (n={}, N={})", n, comps));
  }
  const TorusGrid grid(static_cast<int>(n));
  std::vector<ScalarField> fields;
  for (std::uint32_t c = 0; c < comps; ++c) {
    std::vector<double> values(grid.size());
    for (auto& v : values) v = get_le<double>(is);
    fields.emplace_back(grid, std::move(values));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw InvalidInput(fmt::format("{} has trailing bytes after the field data", path.string()));
  }
  return SystemField(std::move(fields));
}

}  // namespace liouville
