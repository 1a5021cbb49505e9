#include "lsda/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>
#include <zlib.h>

#include "lsda/errors.hpp"

namespace lsda {
namespace {

constexpr char kMagic[4] = {'L', 'S', 'D', 'S'};
constexpr uint32_t kVersion = 1;
constexpr int kGeneratorVersion = 1;

struct Ellipse {
  double cx, cy, ra, rb, cos_t, sin_t;
  bool contains(double x, double y, double scale = 1.0) const {
    const double dx = x - cx, dy = y - cy;
    const double u = cos_t * dx + sin_t * dy;
    const double v = -sin_t * dx + cos_t * dy;
    const double a = ra * scale, b = rb * scale;
    return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
  }
  bool in_canvas(int h, int w, double margin) const {
    const double r = std::max(ra, rb) + margin;
    return cx - r >= 0 && cx + r < w && cy - r >= 0 && cy + r < h;
  }
};

inline float clamp01(float v) { return std::clamp(v, 0.f, 1.f); }

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
    throw FormatError(std::string("dataset: truncated reading ") + what);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

Sample gen_sample(Rng& rng, const PhantomSpec& spec) {
  const int h = spec.height, w = spec.width;
  for (int attempt = 0; attempt < 100; ++attempt) {
    // LV: cavity ellipse inside a concentric ring; RV: ellipse placed against
    // the ring's outside, clipped by label priority into a crescent.
    const double cx = rng.uniform(0.35, 0.6) * w;
    const double cy = rng.uniform(0.35, 0.65) * h;
    const double r1 = rng.uniform(0.08, 0.14) * std::min(h, w);
    const double wall = rng.uniform(0.05, 0.08) * std::min(h, w);
    const double aspect = rng.uniform(0.85, 1.18);
    const double theta = rng.uniform(0.0, 3.14159265358979);
    Ellipse cavity{cx, cy, r1 * aspect, r1 / aspect, std::cos(theta),
                   std::sin(theta)};
    Ellipse outer{cx, cy, (r1 + wall) * aspect, (r1 + wall) / aspect,
                  cavity.cos_t, cavity.sin_t};

    const double phi = rng.uniform(0.0, 6.28318530717959);
    const double rv_a = rng.uniform(0.09, 0.16) * std::min(h, w);
    const double rv_b = rng.uniform(0.06, 0.11) * std::min(h, w);
    const double dist = (r1 + wall) + 0.55 * rv_a;
    Ellipse rv{cx + dist * std::cos(phi), cy + dist * std::sin(phi), rv_a,
               rv_b, std::cos(phi), std::sin(phi)};

    if (!outer.in_canvas(h, w, 2.0) || !rv.in_canvas(h, w, 2.0)) continue;

    const bool sh = spec.shifted;
    const float bg = static_cast<float>(
        sh ? rng.uniform(0.18, 0.32) : rng.uniform(0.10, 0.20));
    const float cav = static_cast<float>(
        sh ? rng.uniform(0.62, 0.78) : rng.uniform(0.72, 0.88));
    const float myo = static_cast<float>(
        sh ? rng.uniform(0.23, 0.37) : rng.uniform(0.28, 0.42));
    const float rvi = static_cast<float>(
        sh ? rng.uniform(0.47, 0.63) : rng.uniform(0.52, 0.68));
    const double sigma = sh ? 0.04 : 0.02;

    Sample s;
    s.image.resize(static_cast<size_t>(h) * w);
    s.label.resize(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const size_t idx = static_cast<size_t>(y) * w + x;
        uint8_t lab = 0;
        float base = bg;
        if (cavity.contains(x, y)) {
          lab = 1;
          base = cav;
        } else if (outer.contains(x, y)) {
          lab = 2;
          base = myo;
        } else if (rv.contains(x, y)) {
          lab = 3;
          base = rvi;
        }
        s.label[idx] = lab;
        s.image[idx] =
            clamp01(base + static_cast<float>(rng.normal() * sigma));
      }
    return s;
  }
  throw ContractError("gen_sample: no in-canvas geometry after 100 attempts");
}

namespace {
void check_severity(float severity) {
  if (!(severity >= 0.f && severity <= 1.f))
    throw ContractError("corrupt: severity must be in [0,1], got " +
                        std::to_string(severity));
}
}  // namespace

std::vector<float> corrupt_bias(const std::vector<float>& x, int h, int w,
                                float severity, Rng& rng) {
  check_severity(severity);
  if (severity == 0.f) return x;
  // smooth second-order polynomial field, normalized to [1-s, 1+s]
  double c[5];
  for (double& v : c) v = rng.uniform(-1.0, 1.0);
  std::vector<float> field(x.size());
  double peak = 1e-9;
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) {
      const double u = 2.0 * xx / (w - 1) - 1.0;
      const double v = 2.0 * y / (h - 1) - 1.0;
      const double f =
          c[0] * u + c[1] * v + c[2] * u * v + c[3] * u * u + c[4] * v * v;
      field[static_cast<size_t>(y) * w + xx] = static_cast<float>(f);
      peak = std::max(peak, std::abs(f));
    }
  std::vector<float> out(x.size());
  for (size_t i = 0; i < x.size(); ++i)
    out[i] = clamp01(x[i] * (1.f + severity * field[i] / peak));
  return out;
}

std::vector<float> corrupt_ghost(const std::vector<float>& x, int h, int w,
                                 float severity, Rng& rng) {
  check_severity(severity);
  if (severity == 0.f) return x;
  const bool along_y = rng.bernoulli(0.5);
  const int dy = along_y ? h / 2 : 0;
  const int dx = along_y ? 0 : w / 2;
  std::vector<float> out(x.size());
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) {
      const size_t src =
          static_cast<size_t>((y + dy) % h) * w + (xx + dx) % w;
      const size_t idx = static_cast<size_t>(y) * w + xx;
      out[idx] = clamp01(x[idx] + 0.5f * severity * x[src]);
    }
  return out;
}

std::vector<float> corrupt_motion(const std::vector<float>& x, int h, int w,
                                  float severity, Rng& rng) {
  check_severity(severity);
  if (severity == 0.f) return x;
  const int copies = 1 + rng.uniform_int(3);
  const int mag = std::max(1, static_cast<int>(std::lround(6.0 * severity)));
  std::vector<float> acc(x.begin(), x.end());
  for (int copy = 0; copy < copies; ++copy) {
    const int dy = rng.uniform_int(2 * mag + 1) - mag;
    const int dx = rng.uniform_int(2 * mag + 1) - mag;
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        const int sy = std::clamp(y + dy, 0, h - 1);
        const int sx = std::clamp(xx + dx, 0, w - 1);
        acc[static_cast<size_t>(y) * w + xx] +=
            x[static_cast<size_t>(sy) * w + sx];
      }
  }
  std::vector<float> out(x.size());
  const float inv = 1.f / (copies + 1);
  for (size_t i = 0; i < x.size(); ++i) out[i] = clamp01(acc[i] * inv);
  return out;
}

std::vector<float> corrupt_spike(const std::vector<float>& x, int h, int w,
                                 float severity, Rng& rng) {
  check_severity(severity);
  if (severity == 0.f) return x;
  const double fx = rng.uniform(2.0, 10.0);
  const double fy = rng.uniform(2.0, 10.0);
  const double phase = rng.uniform(0.0, 6.28318530717959);
  const float amp = 0.5f * severity;
  std::vector<float> out(x.size());
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) {
      const double arg =
          6.28318530717959 * (fx * xx / w + fy * y / h) + phase;
      out[static_cast<size_t>(y) * w + xx] = clamp01(
          x[static_cast<size_t>(y) * w + xx] +
          amp * static_cast<float>(std::sin(arg)));
    }
  return out;
}

std::vector<float> corrupt(const std::string& kind, const std::vector<float>& x,
                           int h, int w, float severity, Rng& rng) {
  if (kind == "bias") return corrupt_bias(x, h, w, severity, rng);
  if (kind == "ghost") return corrupt_ghost(x, h, w, severity, rng);
  if (kind == "motion") return corrupt_motion(x, h, w, severity, rng);
  if (kind == "spike") return corrupt_spike(x, h, w, severity, rng);
  throw ContractError("unknown corruption kind '" + kind + "'");
}

Dataset gen_dataset(const DatasetSpec& spec) {
  Dataset ds;
  ds.height = spec.phantom.height;
  ds.width = spec.phantom.width;
  ds.num_classes = 4;
  ds.split_tag = spec.corruption == "none"
                     ? spec.split_tag
                     : spec.split_tag + "-corrupted:" + spec.corruption;
  for (int i = 0; i < spec.count; ++i) {
    Rng rng(spec.seed, mix64(spec.seed, static_cast<uint64_t>(i)));
    Sample s = gen_sample(rng, spec.phantom);
    s.seed = mix64(spec.seed, static_cast<uint64_t>(i));
    if (spec.corruption != "none") {
      Rng crng(spec.seed, mix64(spec.seed, static_cast<uint64_t>(i), 0xC0));
      s.image = corrupt(spec.corruption, s.image, ds.height, ds.width,
                        spec.severity, crng);
      s.corruption = spec.corruption;
      s.severity = spec.severity;
    }
    ds.samples.push_back(std::move(s));
  }
  nlohmann::json manifest;
  manifest["generator_version"] = kGeneratorVersion;
  manifest["seed"] = spec.seed;
  manifest["count"] = spec.count;
  manifest["shifted"] = spec.phantom.shifted;
  manifest["corruption"] = spec.corruption;
  manifest["severity"] = spec.severity;
  manifest["split_tag"] = ds.split_tag;
  ds.manifest_json = manifest.dump();
  return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("dataset: cannot open " + path.string());
  os.write(kMagic, 4);
  write_u32(os, kVersion);

  nlohmann::json header;
  header["height"] = ds.height;
  header["width"] = ds.width;
  header["num_classes"] = ds.num_classes;
  header["split_tag"] = ds.split_tag;
  header["provenance"] = ds.manifest_json;
  nlohmann::json meta = nlohmann::json::array();
  for (const auto& s : ds.samples)
    meta.push_back({{"seed", s.seed},
                    {"corruption", s.corruption},
                    {"severity", s.severity}});
  header["samples"] = meta;
  const std::string htext = header.dump();
  write_u32(os, static_cast<uint32_t>(htext.size()));
  os.write(htext.data(), static_cast<std::streamsize>(htext.size()));

  write_u32(os, static_cast<uint32_t>(ds.samples.size()));
  for (const auto& s : ds.samples) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(s.image.data()),
                static_cast<uInt>(s.image.size() * sizeof(float)));
    crc = crc32(crc, s.label.data(), static_cast<uInt>(s.label.size()));
    os.write(reinterpret_cast<const char*>(s.image.data()),
             static_cast<std::streamsize>(s.image.size() * sizeof(float)));
    os.write(reinterpret_cast<const char*>(s.label.data()),
             static_cast<std::streamsize>(s.label.size()));
    write_u32(os, static_cast<uint32_t>(crc));
  }
  if (!os) throw FormatError("dataset: write failed for " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("dataset: cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("dataset: bad magic at offset 0 in " + path.string());
  const uint32_t version = read_u32(is, "version");
  if (version != kVersion)
    throw FormatError("dataset: unsupported version " +
                      std::to_string(version));
  const uint32_t hlen = read_u32(is, "header length");
  std::string htext(hlen, '\0');
  if (hlen && !is.read(htext.data(), hlen))
    throw FormatError("dataset: truncated header");
  nlohmann::json header = nlohmann::json::parse(htext, nullptr, false);
  if (header.is_discarded())
    throw FormatError("dataset: header is not valid JSON");

  Dataset ds;
  ds.height = header.at("height");
  ds.width = header.at("width");
  ds.num_classes = header.at("num_classes");
  ds.split_tag = header.at("split_tag");
  ds.manifest_json = header.at("provenance");
  const auto& meta = header.at("samples");

  const uint32_t n = read_u32(is, "sample count");
  if (meta.size() != n)
    throw FormatError("dataset: header lists " + std::to_string(meta.size()) +
                      " samples, file has " + std::to_string(n));
  const size_t pixels = static_cast<size_t>(ds.height) * ds.width;
  for (uint32_t i = 0; i < n; ++i) {
    const auto offset = is.tellg();
    Sample s;
    s.image.resize(pixels);
    s.label.resize(pixels);
    if (!is.read(reinterpret_cast<char*>(s.image.data()),
                 static_cast<std::streamsize>(pixels * sizeof(float))) ||
        !is.read(reinterpret_cast<char*>(s.label.data()),
                 static_cast<std::streamsize>(pixels)))
      throw FormatError("dataset: truncated record " + std::to_string(i) +
                        " at offset " + std::to_string(offset));
    const uint32_t stored = read_u32(is, "record checksum");
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(s.image.data()),
                static_cast<uInt>(pixels * sizeof(float)));
    crc = crc32(crc, s.label.data(), static_cast<uInt>(pixels));
    if (static_cast<uint32_t>(crc) != stored)
      throw FormatError("dataset: checksum mismatch in record " +
                        std::to_string(i) + " at offset " +
                        std::to_string(offset));
    s.seed = meta[i].at("seed");
    s.corruption = meta[i].at("corruption");
    s.severity = meta[i].at("severity");
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace lsda
