#pragma once

#include "lsda/networks.hpp"
#include "lsda/rng.hpp"

namespace lsda {

enum class MaskScheme { dropout, channel_targeted, spatial_targeted };

const char* mask_scheme_name(MaskScheme s);
MaskScheme mask_scheme_from_name(const std::string& name);

struct MaskSpec {
  MaskScheme scheme = MaskScheme::dropout;
  float p_ratio = 0.f;  // fraction of channels / positions masked
  float a = 0.f;        // annealing factor, targeted schemes only
  uint64_t seed = 0;
};

// Multiplicative mask over a [c,h,w] latent code.
struct LatentMask {
  std::vector<float> m;
  int c = 0, h = 0, w = 0;
  MaskSpec provenance;
};

// Gradient of the reconstruction MSE w.r.t. z_i, and of the segmentation
// cross-entropy w.r.t. z_s. Both treat the latent as a fresh leaf: no
// encoder or parameter state is touched.
std::vector<float> grad_latent_rec(const ModelBundle& m,
                                   const std::vector<float>& z_i,
                                   const std::vector<float>& x);
std::vector<float> grad_latent_seg(const ModelBundle& m,
                                   const std::vector<float>& z_s,
                                   const std::vector<uint8_t>& labels);

// Number of units a targeted generator masks out of n: ceil(p_ratio*n),
// with a 1e-6 guard so float fuzz does not bump the count past an integer.
int masked_unit_count(float p_ratio, int n);

// Each channel independently zeroed with probability p_ratio.
LatentMask mask_dropout(int c, int h, int w, float p_ratio, Rng& rng);

// Mask the ceil(p_ratio*c) channels with the largest mean gradient to `a`.
// Ties: lower channel index wins (stable sort by descending mean).
LatentMask mask_channel_targeted(const std::vector<float>& g_z, int c, int h,
                                 int w, float p_ratio, float a);

// Same along the spatial axes: ceil(p_ratio*h*w) positions, whole channel
// column masked at each.
LatentMask mask_spatial_targeted(const std::vector<float>& g_z, int c, int h,
                                 int w, float p_ratio, float a);

// Elementwise product inside the graph; gradients flow through unmasked
// entries of z.
TensorPtr apply_mask(const TensorPtr& z, const LatentMask& mask);

struct HardExample {
  std::vector<float> x_hat;  // corrupted reconstruction [1,H,W], detached
  std::vector<float> p_hat;  // corrupted segmentation [C,H,W], detached
  MaskScheme scheme;
  float p_ratio, a;
};

struct MaskOptions {
  float p_min = 0.f, p_max = 0.5f;
  float a_min = 0.f, a_max = 0.5f;
  bool use_abs_gradient = false;  // rank by |mean| clue instead of raw mean
};

// One scheme / p_ratio / a draw shared by both codes; masks themselves are
// built per code (independent dropout draws, code-specific gradients).
// Outputs are detached constants.
HardExample generate_hard_examples(const ModelBundle& m,
                                   const std::vector<float>& x,
                                   const std::vector<uint8_t>& labels,
                                   Rng& rng,
                                   const MaskOptions& opt = {});

}  // namespace lsda
