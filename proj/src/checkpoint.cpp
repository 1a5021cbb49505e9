#include "lsda/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace lsda {
namespace {

constexpr char kMagic[4] = {'L', 'S', 'D', 'A'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw FormatError(std::string("checkpoint: truncated reading ") + what +
                      " at offset " + std::to_string(is.tellg()));
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is, const char* what) {
  uint32_t n = read_u32(is, what);
  std::string s(n, '\0');
  if (n && !is.read(s.data(), n))
    throw FormatError(std::string("checkpoint: truncated reading ") + what);
  return s;
}

}  // namespace

void save_checkpoint(const ModelBundle& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("checkpoint: cannot open " + path.string());
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  write_string(os, m.config.to_json());
  auto params = m.params();
  write_u32(os, static_cast<uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    write_string(os, name);
    write_u32(os, static_cast<uint32_t>(t->shape.size()));
    for (int d : t->shape) write_u32(os, static_cast<uint32_t>(d));
    os.write(reinterpret_cast<const char*>(t->value.data()),
             static_cast<std::streamsize>(t->value.size() * sizeof(float)));
  }
  if (!os) throw FormatError("checkpoint: write failed for " + path.string());
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("checkpoint: cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("checkpoint: bad magic at offset 0 in " + path.string());
  const uint32_t version = read_u32(is, "version");
  if (version != kVersion)
    throw FormatError("checkpoint: unsupported version " +
                      std::to_string(version));
  ArchConfig cfg = ArchConfig::from_json(read_string(is, "config"));
  ModelBundle m = ModelBundle::init(cfg, /*seed=*/0);
  auto params = m.params();
  const uint32_t n = read_u32(is, "param count");
  if (n != params.size())
    throw FormatError("checkpoint: expected " +
                      std::to_string(params.size()) + " parameters, found " +
                      std::to_string(n));
  for (auto& [name, t] : params) {
    const std::string got = read_string(is, "param name");
    if (got != name)
      throw FormatError("checkpoint: parameter order mismatch, expected '" +
                        name + "', found '" + got + "'");
    const uint32_t ndim = read_u32(is, "rank");
    Shape shape(ndim);
    for (auto& d : shape) d = static_cast<int>(read_u32(is, "dim"));
    if (shape != t->shape)
      throw FormatError("checkpoint: shape mismatch for '" + name + "': " +
                        shape_str(shape) + " vs " + shape_str(t->shape));
    if (!is.read(reinterpret_cast<char*>(t->value.data()),
                 static_cast<std::streamsize>(t->value.size() * sizeof(float))))
      throw FormatError("checkpoint: truncated payload for '" + name +
                        "' at offset " + std::to_string(is.tellg()));
  }
  return m;
}

}  // namespace lsda
