#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "lsda/checkpoint.hpp"
#include "lsda/networks.hpp"
#include "lsda/rng.hpp"
#include "lsda/trainer.hpp"

using namespace lsda;
namespace fs = std::filesystem;

namespace {

ArchConfig tiny_arch() {
  ArchConfig a;
  a.image_h = 16;
  a.image_w = 16;
  a.num_classes = 4;
  a.widths = {4, 8};
  a.latent_channels = 8;
  a.stn_widths = {4};
  return a;
}

TensorPtr rand_image(const ArchConfig& a, uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(static_cast<size_t>(a.image_h) * a.image_w);
  for (auto& x : v) x = static_cast<float>(rng.uniform());
  return make_tensor({1, a.image_h, a.image_w}, std::move(v));
}

}  // namespace

TEST_CASE("initialisation is deterministic in the seed") {
  auto a = tiny_arch();
  auto m1 = ModelBundle::init(a, 42);
  auto m2 = ModelBundle::init(a, 42);
  auto m3 = ModelBundle::init(a, 43);
  auto p1 = m1.params(), p2 = m2.params(), p3 = m3.params();
  REQUIRE(p1.size() == p2.size());
  bool any_diff = false;
  for (size_t i = 0; i < p1.size(); ++i) {
    CHECK(p1[i].first == p2[i].first);
    CHECK(p1[i].second->value == p2[i].second->value);
    if (p1[i].second->value != p3[i].second->value) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("group_params partition the full parameter list") {
  auto m = ModelBundle::init(tiny_arch(), 1);
  size_t total = 0;
  for (const char* g :
       {"encoder", "decoupler", "dec_image", "dec_seg", "stn"}) {
    auto gp = m.group_params(g);
    CHECK(!gp.empty());
    for (auto& [name, t] : gp) {
      CHECK(name.rfind(std::string(g) + ".", 0) == 0);
      CHECK(t->requires_grad);
    }
    total += gp.size();
  }
  CHECK(total == m.params().size());
}

TEST_CASE("latent shapes and non-negativity of the shape code") {
  auto a = tiny_arch();
  auto m = ModelBundle::init(a, 7);
  auto x = rand_image(a, 70);
  auto zi = encode(m, x);
  CHECK(zi->shape == Shape{a.latent_channels, a.latent_h(), a.latent_w()});
  auto zs = decouple(m, zi);
  CHECK(zs->shape == zi->shape);
  for (float v : zs->value) CHECK(v >= 0.f);
}

TEST_CASE("decoders produce correctly ranged outputs") {
  auto a = tiny_arch();
  auto m = ModelBundle::init(a, 9);
  auto x = rand_image(a, 90);
  auto zi = encode(m, x);
  auto xr = decode_image(m, zi);
  CHECK(xr->shape == Shape{1, a.image_h, a.image_w});
  for (float v : xr->value) {
    CHECK(v >= 0.f);
    CHECK(v <= 1.f);
  }
  auto p = decode_seg(m, decouple(m, zi));
  CHECK(p->shape == Shape{a.num_classes, a.image_h, a.image_w});
  int hw = a.image_h * a.image_w;
  for (int px = 0; px < hw; ++px) {
    double s = 0.0;
    for (int c = 0; c < a.num_classes; ++c) {
      float v = p->value[c * hw + px];
      CHECK(v >= 0.f);
      s += v;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("shape corrector output is a probability map of the same shape") {
  auto a = tiny_arch();
  auto m = ModelBundle::init(a, 13);
  auto p = ftn_predict(m, rand_image(a, 130));
  auto q = shape_correct(m, p);
  CHECK(q->shape == p->shape);
  int hw = a.image_h * a.image_w;
  for (int px = 0; px < hw; ++px) {
    double s = 0.0;
    for (int c = 0; c < a.num_classes; ++c) s += q->value[c * hw + px];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("full_predict composes ftn_predict and shape_correct bit-exactly") {
  auto a = tiny_arch();
  auto m = ModelBundle::init(a, 17);
  auto x = rand_image(a, 170);
  auto direct = full_predict(m, x);
  auto composed = shape_correct(m, ftn_predict(m, x));
  CHECK(direct->value == composed->value);
}

TEST_CASE("forward passes are deterministic") {
  auto a = tiny_arch();
  auto m = ModelBundle::init(a, 19);
  auto x = rand_image(a, 190);
  CHECK(ftn_predict(m, x)->value == ftn_predict(m, x)->value);
  CHECK(encode(m, x)->value == encode(m, x)->value);
}

TEST_CASE("encoder locality: a far-away pixel cannot change the latent") {
  // With two 3x3-conv levels the receptive field of any latent unit is far
  // smaller than the image; perturbing one corner pixel must leave latent
  // columns on the opposite side untouched.
  auto a = tiny_arch();
  auto m = ModelBundle::init(a, 23);
  auto x = rand_image(a, 230);
  auto z0 = encode(m, x);
  auto xv = x->value;
  xv[0] += 0.5f;  // top-left pixel
  auto z1 = encode(m, make_tensor(x->shape, xv));
  int lh = a.latent_h(), lw = a.latent_w();
  // Bottom-right latent column: spatial index (lh-1, lw-1).
  for (int c = 0; c < a.latent_channels; ++c) {
    size_t idx = (static_cast<size_t>(c) * lh + (lh - 1)) * lw + (lw - 1);
    CHECK(z0->value[idx] == z1->value[idx]);
  }
  // But the perturbation must reach some latent unit.
  CHECK(z0->value != z1->value);
}

TEST_CASE("one_hot and argmax_channels invert each other") {
  std::vector<uint8_t> labels = {0, 1, 2, 3, 3, 2, 1, 0, 2};
  auto y = one_hot(labels, 4, 3, 3);
  CHECK(y->shape == Shape{4, 3, 3});
  CHECK(argmax_channels(*y) == labels);
  CHECK_FALSE(y->requires_grad);
  CHECK(y->parents.empty());
}

TEST_CASE("a few joint autoencoder steps decrease reconstruction loss") {
  auto a = tiny_arch();
  auto m = ModelBundle::init(a, 29);
  auto x = rand_image(a, 290);
  TrainConfig cfg;
  cfg.arch = a;
  cfg.lr = 1e-3;
  AdamState state;
  // The reconstruction path only reaches the encoder and image decoder.
  auto params = m.group_params("encoder");
  for (auto& p : m.group_params("dec_image")) params.push_back(p);
  double first = 0.0, last = 0.0;
  for (int it = 0; it < 20; ++it) {
    auto xr = decode_image(m, encode(m, x));
    auto loss = mse_loss(xr, x);
    if (it == 0) first = loss->value[0];
    last = loss->value[0];
    auto g = backward(loss);
    adam_step(params, g, state, cfg);
  }
  CHECK(last < first);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  auto a = tiny_arch();
  auto m = ModelBundle::init(a, 31);
  fs::path p = fs::temp_directory_path() / "lsda_test_ckpt.lsda";
  save_checkpoint(m, p);
  auto m2 = load_checkpoint(p);
  CHECK(m2.config == a);
  auto p1 = m.params(), p2 = m2.params();
  REQUIRE(p1.size() == p2.size());
  for (size_t i = 0; i < p1.size(); ++i) {
    CHECK(p1[i].first == p2[i].first);
    CHECK(p1[i].second->value == p2[i].second->value);
  }
  // And the loaded model predicts identically.
  auto x = rand_image(a, 310);
  CHECK(full_predict(m, x)->value == full_predict(m2, x)->value);
  fs::remove(p);
}

TEST_CASE("corrupted checkpoint bytes are rejected") {
  auto m = ModelBundle::init(tiny_arch(), 37);
  fs::path p = fs::temp_directory_path() / "lsda_test_ckpt_bad.lsda";
  save_checkpoint(m, p);
  // Truncate the file: loader must notice, not read garbage.
  fs::resize_file(p, fs::file_size(p) / 2);
  CHECK_THROWS_AS(load_checkpoint(p), FormatError);
  fs::remove(p);
}

TEST_CASE("arch config JSON round trip") {
  auto a = tiny_arch();
  auto b = ArchConfig::from_json(a.to_json());
  CHECK(a == b);
}
