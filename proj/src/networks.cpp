#include "lsda/networks.hpp"

#include <cmath>

#include <json.hpp>

namespace lsda {
namespace {

using Named = std::vector<std::pair<std::string, TensorPtr>>;

ConvParams make_conv(int cin, int cout, int k, int stride, int pad, Rng& rng) {
  ConvParams c;
  std::vector<float> w(static_cast<size_t>(cout) * cin * k * k);
  const float std_dev = std::sqrt(2.0f / (cin * k * k));
  for (auto& v : w) v = static_cast<float>(rng.normal()) * std_dev;
  c.w = make_tensor({cout, cin, k, k}, std::move(w), /*requires_grad=*/true);
  c.b = make_tensor({cout}, 0.f, /*requires_grad=*/true);
  c.stride = stride;
  c.pad = pad;
  return c;
}

ResBlockParams make_res(int ch, Rng& rng) {
  return {make_conv(ch, ch, 3, 1, 1, rng), make_conv(ch, ch, 3, 1, 1, rng)};
}

TensorPtr apply_conv(const ConvParams& c, const TensorPtr& x) {
  return conv2d(x, c.w, c.b, c.stride, c.pad);
}

TensorPtr apply_res(const ResBlockParams& r, const TensorPtr& x) {
  return relu(add(x, apply_conv(r.c2, relu(apply_conv(r.c1, x)))));
}

void name_conv(Named& out, const std::string& prefix, const ConvParams& c) {
  out.emplace_back(prefix + ".w", c.w);
  out.emplace_back(prefix + ".b", c.b);
}

void name_res(Named& out, const std::string& prefix, const ResBlockParams& r) {
  name_conv(out, prefix + ".c1", r.c1);
  name_conv(out, prefix + ".c2", r.c2);
}

}  // namespace

std::string ArchConfig::to_json() const {
  nlohmann::json j;
  j["image_h"] = image_h;
  j["image_w"] = image_w;
  j["num_classes"] = num_classes;
  j["widths"] = widths;
  j["latent_channels"] = latent_channels;
  j["stn_widths"] = stn_widths;
  return j.dump();
}

ArchConfig ArchConfig::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ArchConfig c;
  c.image_h = j.at("image_h");
  c.image_w = j.at("image_w");
  c.num_classes = j.at("num_classes");
  c.widths = j.at("widths").get<std::vector<int>>();
  c.latent_channels = j.at("latent_channels");
  c.stn_widths = j.at("stn_widths").get<std::vector<int>>();
  return c;
}

ModelBundle ModelBundle::init(const ArchConfig& config, uint64_t seed) {
  const int d = config.downsamplings();
  if ((config.image_h % (1 << d)) != 0 || (config.image_w % (1 << d)) != 0)
    throw ContractError("ModelBundle: image size " +
                        std::to_string(config.image_h) + "x" +
                        std::to_string(config.image_w) +
                        " not divisible by 2^" + std::to_string(d));
  const int sd = static_cast<int>(config.stn_widths.size());
  if ((config.image_h % (1 << sd)) != 0 || (config.image_w % (1 << sd)) != 0)
    throw ContractError("ModelBundle: image size not divisible by STN depth");

  Rng rng(seed, /*stream=*/0x6d6f64656cULL);
  ModelBundle m;
  m.config = config;

  const auto& wdt = config.widths;
  m.encoder.stem = make_conv(1, wdt[0], 3, 1, 1, rng);
  for (int l = 0; l < d; ++l) {
    m.encoder.res.push_back(make_res(wdt[l], rng));
    const int next = (l + 1 < d) ? wdt[l + 1] : config.latent_channels;
    m.encoder.down.push_back(make_conv(wdt[l], next, 3, 1, 1, rng));
  }

  m.decoupler.c1 =
      make_conv(config.latent_channels, config.latent_channels, 3, 1, 1, rng);
  m.decoupler.c2 =
      make_conv(config.latent_channels, config.latent_channels, 3, 1, 1, rng);

  auto make_decoder = [&](int out_ch) {
    DecoderParams dec;
    dec.bottleneck = make_res(config.latent_channels, rng);
    int prev = config.latent_channels;
    for (int l = d - 1; l >= 0; --l) {
      dec.up.push_back(make_conv(prev, wdt[l], 3, 1, 1, rng));
      dec.res.push_back(make_res(wdt[l], rng));
      prev = wdt[l];
    }
    dec.head = make_conv(prev, out_ch, 3, 1, 1, rng);
    return dec;
  };
  m.dec_image = make_decoder(1);
  m.dec_seg = make_decoder(config.num_classes);

  const auto& sw = config.stn_widths;
  int prev = config.num_classes;
  for (int l = 0; l < sd; ++l) {
    m.stn.down.push_back(make_conv(prev, sw[l], 3, 1, 1, rng));
    m.stn.res.push_back(make_res(sw[l], rng));
    prev = sw[l];
  }
  for (int l = sd - 1; l >= 0; --l) {
    const int next = (l > 0) ? sw[l - 1] : sw[0];
    m.stn.up.push_back(make_conv(prev, next, 3, 1, 1, rng));
    prev = next;
  }
  m.stn.head = make_conv(prev, config.num_classes, 3, 1, 1, rng);
  return m;
}

Named ModelBundle::group_params(const std::string& group) const {
  Named out;
  if (group == "encoder") {
    name_conv(out, "encoder.stem", encoder.stem);
    for (size_t l = 0; l < encoder.res.size(); ++l) {
      name_res(out, "encoder.res" + std::to_string(l), encoder.res[l]);
      name_conv(out, "encoder.down" + std::to_string(l), encoder.down[l]);
    }
  } else if (group == "decoupler") {
    name_conv(out, "decoupler.c1", decoupler.c1);
    name_conv(out, "decoupler.c2", decoupler.c2);
  } else if (group == "dec_image" || group == "dec_seg") {
    const DecoderParams& dec = (group == "dec_image") ? dec_image : dec_seg;
    name_res(out, group + ".bottleneck", dec.bottleneck);
    for (size_t l = 0; l < dec.up.size(); ++l) {
      name_conv(out, group + ".up" + std::to_string(l), dec.up[l]);
      name_res(out, group + ".res" + std::to_string(l), dec.res[l]);
    }
    name_conv(out, group + ".head", dec.head);
  } else if (group == "stn") {
    for (size_t l = 0; l < stn.down.size(); ++l) {
      name_conv(out, "stn.down" + std::to_string(l), stn.down[l]);
      name_res(out, "stn.res" + std::to_string(l), stn.res[l]);
    }
    for (size_t l = 0; l < stn.up.size(); ++l)
      name_conv(out, "stn.up" + std::to_string(l), stn.up[l]);
    name_conv(out, "stn.head", stn.head);
  } else {
    throw ContractError("ModelBundle: unknown parameter group '" + group + "'");
  }
  return out;
}

Named ModelBundle::params() const {
  Named out;
  for (const char* g : {"encoder", "decoupler", "dec_image", "dec_seg", "stn"})
    for (auto& p : group_params(g)) out.push_back(std::move(p));
  return out;
}

TensorPtr encode(const ModelBundle& m, const TensorPtr& x) {
  const auto& cfg = m.config;
  if (x->shape != Shape{1, cfg.image_h, cfg.image_w})
    throw DimensionError("encode: expected [1," + std::to_string(cfg.image_h) +
                         "," + std::to_string(cfg.image_w) + "], got " +
                         shape_str(x->shape));
  TensorPtr h = relu(apply_conv(m.encoder.stem, x));
  for (size_t l = 0; l < m.encoder.res.size(); ++l) {
    h = apply_res(m.encoder.res[l], h);
    h = avgpool2x(apply_conv(m.encoder.down[l], h));
    if (l + 1 < m.encoder.res.size()) h = relu(h);
    // final down stays linear: z_i is unconstrained
  }
  return h;
}

TensorPtr decouple(const ModelBundle& m, const TensorPtr& z_i) {
  // two channel-preserving convs, ReLU only after the second
  return relu(apply_conv(m.decoupler.c2, apply_conv(m.decoupler.c1, z_i)));
}

namespace {
TensorPtr run_decoder(const DecoderParams& dec, const TensorPtr& z) {
  TensorPtr h = apply_res(dec.bottleneck, z);
  for (size_t l = 0; l < dec.up.size(); ++l) {
    h = relu(apply_conv(dec.up[l], upsample2x(h)));
    h = apply_res(dec.res[l], h);
  }
  return apply_conv(dec.head, h);
}
}  // namespace

TensorPtr decode_image(const ModelBundle& m, const TensorPtr& z_i) {
  return sigmoid(run_decoder(m.dec_image, z_i));
}

TensorPtr decode_seg(const ModelBundle& m, const TensorPtr& z_s) {
  return softmax_channels(run_decoder(m.dec_seg, z_s));
}

TensorPtr shape_correct(const ModelBundle& m, const TensorPtr& p) {
  const auto& cfg = m.config;
  if (p->shape != Shape{cfg.num_classes, cfg.image_h, cfg.image_w})
    throw DimensionError("shape_correct: expected [" +
                         std::to_string(cfg.num_classes) + ",H,W], got " +
                         shape_str(p->shape));
  TensorPtr h = p;
  for (size_t l = 0; l < m.stn.down.size(); ++l) {
    h = relu(avgpool2x(apply_conv(m.stn.down[l], h)));
    h = apply_res(m.stn.res[l], h);
  }
  for (const auto& up : m.stn.up) h = relu(apply_conv(up, upsample2x(h)));
  return softmax_channels(apply_conv(m.stn.head, h));
}

TensorPtr ftn_predict(const ModelBundle& m, const TensorPtr& x) {
  return decode_seg(m, decouple(m, encode(m, x)));
}

TensorPtr full_predict(const ModelBundle& m, const TensorPtr& x) {
  return shape_correct(m, ftn_predict(m, x));
}

TensorPtr one_hot(const std::vector<uint8_t>& labels, int C, int h, int w) {
  if (labels.size() != static_cast<size_t>(h) * w)
    throw DimensionError("one_hot: label count mismatch");
  std::vector<float> v(static_cast<size_t>(C) * h * w, 0.f);
  for (size_t p = 0; p < labels.size(); ++p) {
    if (labels[p] >= C)
      throw ContractError("one_hot: label " + std::to_string(labels[p]) +
                          " out of range for C=" + std::to_string(C));
    v[static_cast<size_t>(labels[p]) * h * w + p] = 1.f;
  }
  return make_tensor({C, h, w}, std::move(v));
}

std::vector<uint8_t> argmax_channels(const Node& prob) {
  const int C = prob.shape[0];
  const size_t hw = static_cast<size_t>(prob.shape[1]) * prob.shape[2];
  std::vector<uint8_t> out(hw, 0);
  for (size_t p = 0; p < hw; ++p) {
    float best = prob.value[p];
    for (int c = 1; c < C; ++c)
      if (prob.value[c * hw + p] > best) {
        best = prob.value[c * hw + p];
        out[p] = static_cast<uint8_t>(c);
      }
  }
  return out;
}

}  // namespace lsda
