#include "skyseg/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "skyseg/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "weight files are little-endian; byte swapping is not implemented");

namespace skyseg {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'N', 'W'};
constexpr std::uint16_t kVersion = 1;

template <class U>
void put(std::ostream& out, U v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <class U>
U get(std::istream& in, const char* what) {
  U v;
  in.read(reinterpret_cast<char*>(&v), sizeof(U));
  if (!in) throw FormatError(std::string("weights: truncated while reading ") + what);
  return v;
}

}  // namespace

void save_weights(const std::filesystem::path& path,
                  const std::vector<NamedTensorF>& tensors) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(kMagic, 4);
    put<std::uint16_t>(out, kVersion);
    put<std::uint32_t>(out, std::uint32_t(tensors.size()));
    for (const auto& t : tensors) {
      if (t.name.size() > 0xFFFF) throw FormatError("weights: tensor name too long");
      if (t.dims.size() > 0xFF) throw FormatError("weights: tensor rank too large");
      if (t.data.size() != shape_size(t.dims))
        throw ShapeError("weights: data/shape mismatch for " + t.name);
      put<std::uint16_t>(out, std::uint16_t(t.name.size()));
      out.write(t.name.data(), std::streamsize(t.name.size()));
      put<std::uint8_t>(out, std::uint8_t(t.dims.size()));
      for (std::size_t d : t.dims) put<std::uint32_t>(out, std::uint32_t(d));
      out.write(reinterpret_cast<const char*>(t.data.data()),
                std::streamsize(t.data.size() * sizeof(float)));
    }
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<NamedTensorF> load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("weights: bad magic in " + path.string());
  if (get<std::uint16_t>(in, "version") != kVersion)
    throw FormatError("weights: unsupported version in " + path.string());
  auto count = get<std::uint32_t>(in, "tensor count");
  std::vector<NamedTensorF> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensorF t;
    auto name_len = get<std::uint16_t>(in, "name length");
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    if (!in) throw FormatError("weights: truncated name in " + path.string());
    auto rank = get<std::uint8_t>(in, "rank");
    t.dims.resize(rank);
    for (auto& d : t.dims) d = get<std::uint32_t>(in, "dim");
    t.data.resize(shape_size(t.dims));
    in.read(reinterpret_cast<char*>(t.data.data()),
            std::streamsize(t.data.size() * sizeof(float)));
    if (!in) throw FormatError("weights: truncated payload for " + t.name);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace skyseg
