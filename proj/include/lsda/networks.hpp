#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lsda/ops.hpp"
#include "lsda/rng.hpp"
#include "lsda/tensor.hpp"

namespace lsda {

struct ArchConfig {
  int image_h = 64;
  int image_w = 64;
  int num_classes = 4;
  std::vector<int> widths = {8, 16, 32};  // per resolution level, top-down
  int latent_channels = 32;               // c of the bottleneck code
  std::vector<int> stn_widths = {8, 16};

  int downsamplings() const { return static_cast<int>(widths.size()); }
  int latent_h() const { return image_h >> downsamplings(); }
  int latent_w() const { return image_w >> downsamplings(); }

  std::string to_json() const;
  static ArchConfig from_json(const std::string& text);
  bool operator==(const ArchConfig&) const = default;
};

struct ConvParams {
  TensorPtr w, b;
  int stride = 1, pad = 1;
};

struct ResBlockParams {
  ConvParams c1, c2;
};

// Encoder: stem + per-level (res block, strided down-conv).
struct EncoderParams {
  ConvParams stem;
  std::vector<ResBlockParams> res;
  std::vector<ConvParams> down;
};

// Decoder mirrors the encoder: bottleneck res block, then per-level
// (2x upsample, conv, res block), then a 1-channel / C-channel head.
struct DecoderParams {
  ResBlockParams bottleneck;
  std::vector<ConvParams> up;
  std::vector<ResBlockParams> res;
  ConvParams head;
};

struct DecouplerParams {
  ConvParams c1, c2;
};

struct StnParams {
  std::vector<ConvParams> down;
  std::vector<ResBlockParams> res;
  std::vector<ConvParams> up;
  ConvParams head;
};

// All learnable parameters plus the architecture they instantiate.
class ModelBundle {
 public:
  ArchConfig config;
  EncoderParams encoder;
  DecouplerParams decoupler;
  DecoderParams dec_image;
  DecoderParams dec_seg;
  StnParams stn;

  static ModelBundle init(const ArchConfig& config, uint64_t seed);

  // Fixed, deterministic order; names are "<group>.<layer>.<w|b>".
  std::vector<std::pair<std::string, TensorPtr>> params() const;
  std::vector<std::pair<std::string, TensorPtr>> group_params(
      const std::string& group) const;  // encoder|decoupler|dec_image|dec_seg|stn
};

// Forward passes. Inputs x are [1,H,W] in [0,1]; probabilities are [C,H,W].
TensorPtr encode(const ModelBundle& m, const TensorPtr& x);         // z_i
TensorPtr decouple(const ModelBundle& m, const TensorPtr& z_i);     // z_s >= 0
TensorPtr decode_image(const ModelBundle& m, const TensorPtr& z_i); // [1,H,W]
TensorPtr decode_seg(const ModelBundle& m, const TensorPtr& z_s);   // SegProb
TensorPtr shape_correct(const ModelBundle& m, const TensorPtr& p);  // SegProb
TensorPtr ftn_predict(const ModelBundle& m, const TensorPtr& x);
TensorPtr full_predict(const ModelBundle& m, const TensorPtr& x);

// One-hot [C,H,W] tensor from compact labels (detached constant).
TensorPtr one_hot(const std::vector<uint8_t>& labels, int C, int h, int w);

// argmax over the channel axis of a [C,h,w] probability tensor.
std::vector<uint8_t> argmax_channels(const Node& prob);

}  // namespace lsda
