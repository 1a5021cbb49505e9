#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lsda/rng.hpp"

namespace lsda {

struct Sample {
  std::vector<float> image;    // H*W, row-major, values in [0,1]
  std::vector<uint8_t> label;  // H*W class indices
  uint64_t seed = 0;
  std::string corruption = "none";
  float severity = 0.f;
};

struct Dataset {
  std::vector<Sample> samples;
  int height = 0, width = 0, num_classes = 4;
  std::string split_tag;  // train | val | test | test-corrupted:<kind> | ...
  std::string manifest_json;  // provenance: generator version, seeds, flags

  size_t size() const { return samples.size(); }
};

struct PhantomSpec {
  int height = 64, width = 64;
  // Shifted-generator test sets draw intensities/noise from different ranges.
  bool shifted = false;
};

// One phantom: bright cavity ellipse (class 1) inside a ring (class 2),
// with an adjacent crescent structure (class 3) clipped by the ring.
// Deterministic given the rng state; geometry leaving the canvas is
// resampled up to 100 times.
Sample gen_sample(Rng& rng, const PhantomSpec& spec);

struct DatasetSpec {
  PhantomSpec phantom;
  int count = 10;
  uint64_t seed = 0;
  std::string split_tag = "train";
  std::string corruption = "none";  // none | bias | ghost | motion | spike
  float severity = 0.f;
};

Dataset gen_dataset(const DatasetSpec& spec);

// Image-space corruptions; labels are never modified, severity in [0,1],
// severity 0 is a bit-exact identity.
std::vector<float> corrupt_bias(const std::vector<float>& x, int h, int w,
                                float severity, Rng& rng);
std::vector<float> corrupt_ghost(const std::vector<float>& x, int h, int w,
                                 float severity, Rng& rng);
std::vector<float> corrupt_motion(const std::vector<float>& x, int h, int w,
                                  float severity, Rng& rng);
std::vector<float> corrupt_spike(const std::vector<float>& x, int h, int w,
                                 float severity, Rng& rng);

std::vector<float> corrupt(const std::string& kind, const std::vector<float>& x,
                           int h, int w, float severity, Rng& rng);

// Dataset file: magic "LSDS", version u32, JSON manifest, then per sample
// f32 image + u8 label payload with a CRC32 per record. Bit-exact round trip.
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace lsda
