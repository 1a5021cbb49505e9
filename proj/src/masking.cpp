#include "lsda/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lsda {
namespace {

void check_ratio(float p_ratio) {
  if (!(p_ratio >= 0.f && p_ratio <= 1.f))
    throw ContractError("mask: p_ratio must be in [0,1], got " +
                        std::to_string(p_ratio));
}

// Indices of the top ceil(p_ratio*n) means, descending, ties by lower index.
std::vector<int> top_indices(const std::vector<float>& means, float p_ratio) {
  const int n = static_cast<int>(means.size());
  const int count = masked_unit_count(p_ratio, n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return means[i] > means[j]; });
  order.resize(std::min(count, n));
  return order;
}

}  // namespace

int masked_unit_count(float p_ratio, int n) {
  // ceil(p_ratio*n) with a guard against float fuzz just above an integer
  const double t = static_cast<double>(p_ratio) * n;
  const int count = static_cast<int>(std::ceil(t - 1e-6));
  return std::clamp(count, 0, n);
}

const char* mask_scheme_name(MaskScheme s) {
  switch (s) {
    case MaskScheme::dropout: return "dropout";
    case MaskScheme::channel_targeted: return "channel";
    case MaskScheme::spatial_targeted: return "spatial";
  }
  return "?";
}

MaskScheme mask_scheme_from_name(const std::string& name) {
  if (name == "dropout") return MaskScheme::dropout;
  if (name == "channel") return MaskScheme::channel_targeted;
  if (name == "spatial") return MaskScheme::spatial_targeted;
  throw ContractError("unknown mask scheme '" + name + "'");
}

std::vector<float> grad_latent_rec(const ModelBundle& m,
                                   const std::vector<float>& z_i,
                                   const std::vector<float>& x) {
  const auto& cfg = m.config;
  auto leaf = make_tensor(
      {cfg.latent_channels, cfg.latent_h(), cfg.latent_w()}, z_i);
  leaf->marked = true;
  auto target = make_tensor({1, cfg.image_h, cfg.image_w}, x);
  auto loss = mse_loss(decode_image(m, leaf), target);
  return backward(loss).at(leaf);
}

std::vector<float> grad_latent_seg(const ModelBundle& m,
                                   const std::vector<float>& z_s,
                                   const std::vector<uint8_t>& labels) {
  const auto& cfg = m.config;
  auto leaf = make_tensor(
      {cfg.latent_channels, cfg.latent_h(), cfg.latent_w()}, z_s);
  leaf->marked = true;
  auto y = one_hot(labels, cfg.num_classes, cfg.image_h, cfg.image_w);
  auto loss = cross_entropy_loss(decode_seg(m, leaf), y);
  return backward(loss).at(leaf);
}

LatentMask mask_dropout(int c, int h, int w, float p_ratio, Rng& rng) {
  check_ratio(p_ratio);
  LatentMask mask;
  mask.c = c;
  mask.h = h;
  mask.w = w;
  mask.provenance = {MaskScheme::dropout, p_ratio, 0.f, 0};
  mask.m.assign(static_cast<size_t>(c) * h * w, 1.f);
  const size_t plane = static_cast<size_t>(h) * w;
  for (int i = 0; i < c; ++i)
    if (rng.bernoulli(p_ratio))
      std::fill_n(mask.m.begin() + i * plane, plane, 0.f);
  return mask;
}

LatentMask mask_channel_targeted(const std::vector<float>& g_z, int c, int h,
                                 int w, float p_ratio, float a) {
  check_ratio(p_ratio);
  const size_t plane = static_cast<size_t>(h) * w;
  if (g_z.size() != plane * c)
    throw DimensionError("mask_channel_targeted: gradient size mismatch");
  std::vector<float> means(c);
  for (int i = 0; i < c; ++i) {
    double acc = 0.0;
    for (size_t p = 0; p < plane; ++p) acc += g_z[i * plane + p];
    means[i] = static_cast<float>(acc / plane);
  }
  LatentMask mask;
  mask.c = c;
  mask.h = h;
  mask.w = w;
  mask.provenance = {MaskScheme::channel_targeted, p_ratio, a, 0};
  mask.m.assign(plane * c, 1.f);
  for (int i : top_indices(means, p_ratio))
    std::fill_n(mask.m.begin() + i * plane, plane, a);
  return mask;
}

LatentMask mask_spatial_targeted(const std::vector<float>& g_z, int c, int h,
                                 int w, float p_ratio, float a) {
  check_ratio(p_ratio);
  const size_t plane = static_cast<size_t>(h) * w;
  if (g_z.size() != plane * c)
    throw DimensionError("mask_spatial_targeted: gradient size mismatch");
  std::vector<float> means(plane);
  for (size_t p = 0; p < plane; ++p) {
    double acc = 0.0;
    for (int i = 0; i < c; ++i) acc += g_z[i * plane + p];
    means[p] = static_cast<float>(acc / c);
  }
  LatentMask mask;
  mask.c = c;
  mask.h = h;
  mask.w = w;
  mask.provenance = {MaskScheme::spatial_targeted, p_ratio, a, 0};
  mask.m.assign(plane * c, 1.f);
  for (int p : top_indices(means, p_ratio))
    for (int i = 0; i < c; ++i) mask.m[i * plane + p] = a;
  return mask;
}

TensorPtr apply_mask(const TensorPtr& z, const LatentMask& mask) {
  if (z->shape != Shape{mask.c, mask.h, mask.w})
    throw DimensionError("apply_mask: code " + shape_str(z->shape) +
                         " vs mask [" + std::to_string(mask.c) + "," +
                         std::to_string(mask.h) + "," +
                         std::to_string(mask.w) + "]");
  return mul(z, make_tensor(z->shape, mask.m));
}

HardExample generate_hard_examples(const ModelBundle& m,
                                   const std::vector<float>& x,
                                   const std::vector<uint8_t>& labels,
                                   Rng& rng, const MaskOptions& opt) {
  const auto& cfg = m.config;
  const int c = cfg.latent_channels, lh = cfg.latent_h(), lw = cfg.latent_w();

  auto xt = make_tensor({1, cfg.image_h, cfg.image_w}, x);
  auto z_i = encode(m, xt);
  auto z_s = decouple(m, z_i);

  HardExample he;
  he.scheme = static_cast<MaskScheme>(rng.uniform_int(3));
  he.p_ratio = static_cast<float>(rng.uniform(opt.p_min, opt.p_max));
  do {
    he.a = static_cast<float>(rng.uniform(opt.a_min, opt.a_max));
  } while (he.a <= opt.a_min);  // open interval

  auto targeted = [&](const TensorPtr& z, bool shape_code) {
    std::vector<float> g = shape_code
                               ? grad_latent_seg(m, z->value, labels)
                               : grad_latent_rec(m, z->value, x);
    if (opt.use_abs_gradient)
      for (auto& v : g) v = std::abs(v);
    return he.scheme == MaskScheme::channel_targeted
               ? mask_channel_targeted(g, c, lh, lw, he.p_ratio, he.a)
               : mask_spatial_targeted(g, c, lh, lw, he.p_ratio, he.a);
  };

  LatentMask m_i, m_s;
  if (he.scheme == MaskScheme::dropout) {
    m_i = mask_dropout(c, lh, lw, he.p_ratio, rng);
    m_s = mask_dropout(c, lh, lw, he.p_ratio, rng);
  } else {
    m_i = targeted(z_i, /*shape_code=*/false);
    m_s = targeted(z_s, /*shape_code=*/true);
  }

  // Decode from the masked codes as fresh leaves: outputs carry no graph
  // history, so later losses cannot reach the generation pass.
  auto zi_hat = make_tensor(z_i->shape, z_i->value);
  auto zs_hat = make_tensor(z_s->shape, z_s->value);
  const size_t n = zi_hat->value.size();
  for (size_t i = 0; i < n; ++i) {
    zi_hat->value[i] *= m_i.m[i];
    zs_hat->value[i] *= m_s.m[i];
  }
  he.x_hat = decode_image(m, zi_hat)->value;
  he.p_hat = decode_seg(m, zs_hat)->value;
  return he;
}

}  // namespace lsda
