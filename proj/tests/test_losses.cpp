#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "lsda/losses.hpp"
#include "lsda/rng.hpp"

using namespace lsda;

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

Sample rand_sample(const ArchConfig& a, uint64_t seed) {
  Rng rng(seed);
  Sample s;
  s.seed = seed;
  s.image.resize(static_cast<size_t>(a.image_h) * a.image_w);
  for (auto& v : s.image) v = static_cast<float>(rng.uniform());
  s.label.resize(s.image.size());
  for (auto& v : s.label)
    v = static_cast<uint8_t>(rng.uniform_int(a.num_classes));
  return s;
}

// Names of parameter groups that received a gradient entry.
std::set<std::string> touched_groups(const ModelBundle& m,
                                     const GradientMap& g) {
  std::set<std::string> out;
  for (const auto& [name, t] : m.params())
    if (g.contains(t)) out.insert(name.substr(0, name.find('.')));
  return out;
}

}  // namespace

TEST_CASE("cross entropy of the uniform prediction is ln C") {
  // p = 1/4 everywhere, any one-hot target: -ln(1/4) = ln 4 per pixel.
  auto p = make_tensor({4, 2, 2}, 0.25f);
  std::vector<uint8_t> labels = {0, 1, 2, 3};
  auto y = one_hot(labels, 4, 2, 2);
  auto l = cross_entropy_loss(p, y);
  CHECK(l->value[0] == doctest::Approx(std::log(4.0)).epsilon(1e-5));
  // p = 1/2 on the true class -> ln 2.
  std::vector<float> pv(16, 0.5f / 3.f);
  for (int px = 0; px < 4; ++px) pv[labels[px] * 4 + px] = 0.5f;
  auto l2 = cross_entropy_loss(make_tensor({4, 2, 2}, pv), y);
  CHECK(l2->value[0] == doctest::Approx(std::log(2.0)).epsilon(1e-5));
}

TEST_CASE("mse of [1,3] against [1,1] is 2") {
  auto a = make_tensor({2}, {1.f, 3.f});
  auto b = make_tensor({2}, {1.f, 1.f});
  CHECK(mse_loss(a, b)->value[0] == doctest::Approx(2.f));
}

TEST_CASE("standard loss total is the sum of its four components") {
  auto arch = tiny_arch();
  auto m = ModelBundle::init(arch, 3);
  auto s = rand_sample(arch, 30);
  auto g = standard_loss_graph(m, s);
  REQUIRE(g.components.size() == 4);
  CHECK(g.components[0].first == "rec");
  CHECK(g.components[1].first == "seg");
  CHECK(g.components[2].first == "shp_pprime");
  CHECK(g.components[3].first == "shp_yprime");
  double acc = 0.0;
  for (auto& [n, t] : g.components) acc += t->value[0];
  CHECK(std::abs(g.total->value[0] - acc) <= 1e-6);
}

TEST_CASE("loss weights scale the matching components") {
  auto arch = tiny_arch();
  auto m = ModelBundle::init(arch, 5);
  auto s = rand_sample(arch, 50);
  auto base = standard_loss_graph(m, s);
  LossWeights w;
  w.rec = 2.f;
  w.shp = 0.5f;
  auto scaled = standard_loss_graph(m, s, w);
  CHECK(scaled.components[0].second->value[0] ==
        doctest::Approx(2.f * base.components[0].second->value[0]));
  CHECK(scaled.components[1].second->value[0] ==
        doctest::Approx(base.components[1].second->value[0]));
  CHECK(scaled.components[2].second->value[0] ==
        doctest::Approx(0.5f * base.components[2].second->value[0]));

  // The hard factor multiplies every hard component on top of its own
  // weight, and leaves the standard components untouched.
  Rng rng(51);
  auto he = generate_hard_examples(m, s.image, s.label, rng, {});
  auto hb = hard_loss_graph(m, s, he);
  LossWeights hw;
  hw.rec = 2.f;
  hw.hard = 0.25f;
  auto hs = hard_loss_graph(m, s, he, hw);
  CHECK(hs.components[0].second->value[0] ==
        doctest::Approx(0.5f * hb.components[0].second->value[0]));
  for (int i = 1; i < 4; ++i)
    CHECK(hs.components[i].second->value[0] ==
          doctest::Approx(0.25f * hb.components[i].second->value[0]));
}

TEST_CASE("shp(p',y) reaches encoder, decoupler, seg decoder and corrector") {
  auto arch = tiny_arch();
  auto m = ModelBundle::init(arch, 7);
  auto s = rand_sample(arch, 70);
  auto g = standard_loss_graph(m, s);
  auto grads = backward(g.components[2].second);  // shp_pprime
  auto groups = touched_groups(m, grads);
  CHECK(groups.count("encoder"));
  CHECK(groups.count("decoupler"));
  CHECK(groups.count("dec_seg"));
  CHECK(groups.count("stn"));
  CHECK_FALSE(groups.count("dec_image"));
}

TEST_CASE("shp(y',y) trains only the corrector") {
  auto arch = tiny_arch();
  auto m = ModelBundle::init(arch, 9);
  auto s = rand_sample(arch, 90);
  auto g = standard_loss_graph(m, s);
  auto grads = backward(g.components[3].second);  // shp_yprime
  CHECK(touched_groups(m, grads) == std::set<std::string>{"stn"});
}

TEST_CASE("rec and seg components reach their own branches only") {
  auto arch = tiny_arch();
  auto m = ModelBundle::init(arch, 11);
  auto s = rand_sample(arch, 110);
  auto g = standard_loss_graph(m, s);
  CHECK(touched_groups(m, backward(g.components[0].second)) ==
        std::set<std::string>{"dec_image", "encoder"});
  CHECK(touched_groups(m, backward(g.components[1].second)) ==
        std::set<std::string>{"dec_seg", "decoupler", "encoder"});
  // The full objective reaches every group.
  CHECK(touched_groups(m, backward(g.total)) ==
        std::set<std::string>{"dec_image", "dec_seg", "decoupler", "encoder",
                              "stn"});
}

TEST_CASE("hard examples enter the hard loss as constants") {
  auto arch = tiny_arch();
  auto m = ModelBundle::init(arch, 13);
  auto s = rand_sample(arch, 130);
  Rng rng(131);
  auto he = generate_hard_examples(m, s.image, s.label, rng);
  auto g = hard_loss_graph(m, s, he);
  REQUIRE(g.components.size() == 4);
  // hard_shp_phat runs only the corrector on the constant p_hat.
  auto grads = backward(g.components[2].second);
  CHECK(touched_groups(m, grads) == std::set<std::string>{"stn"});
  // hard_rec re-encodes x_hat: encoder + image decoder.
  CHECK(touched_groups(m, backward(g.components[0].second)) ==
        std::set<std::string>{"dec_image", "encoder"});
  // The full hard objective never reaches dec_image via p-paths but does
  // reach every group overall.
  CHECK(touched_groups(m, backward(g.total)) ==
        std::set<std::string>{"dec_image", "dec_seg", "decoupler", "encoder",
                              "stn"});
}

TEST_CASE("cooperative loss equals standard plus hard") {
  auto arch = tiny_arch();
  auto m = ModelBundle::init(arch, 17);
  auto s = rand_sample(arch, 170);
  Rng rng(171);
  auto he = generate_hard_examples(m, s.image, s.label, rng);
  auto gs = standard_loss_graph(m, s);
  auto gh = hard_loss_graph(m, s, he);
  auto gc = cooperative_loss_graph(m, s, he);
  REQUIRE(gc.components.size() == 8);
  CHECK(std::abs(gc.total->value[0] -
                 (gs.total->value[0] + gh.total->value[0])) <= 1e-6);
  // Component names concatenate in order.
  CHECK(gc.components[4].first == "hard_rec");
  CHECK(gc.components[7].first == "hard_shp_pbar");
}

TEST_CASE("batch reports average per-sample graphs") {
  auto arch = tiny_arch();
  auto m = ModelBundle::init(arch, 19);
  std::vector<Sample> batch = {rand_sample(arch, 190), rand_sample(arch, 191),
                               rand_sample(arch, 192)};
  auto rep = standard_loss(m, batch);
  double acc = 0.0;
  for (const auto& s : batch) acc += standard_loss_graph(m, s).total->value[0];
  CHECK(rep.total == doctest::Approx(acc / 3.0).epsilon(1e-6));
  CHECK(rep.component("rec") > 0.0);
  CHECK_THROWS_AS(rep.component("nope"), ContractError);
}

TEST_CASE("cooperative report equals standard plus hard reports") {
  auto arch = tiny_arch();
  auto m = ModelBundle::init(arch, 23);
  std::vector<Sample> batch = {rand_sample(arch, 230), rand_sample(arch, 231)};
  Rng rng(232);
  std::vector<HardExample> hard;
  for (const auto& s : batch)
    hard.push_back(generate_hard_examples(m, s.image, s.label, rng));
  auto rs = standard_loss(m, batch);
  auto rh = hard_loss(m, batch, hard);
  auto rc = cooperative_loss(m, batch, hard);
  CHECK(rc.total == doctest::Approx(rs.total + rh.total).epsilon(1e-6));
  CHECK(hard_loss(m, batch, hard).components.size() == 4);
  std::vector<HardExample> short_hard = {hard[0]};
  CHECK_THROWS_AS(hard_loss(m, batch, short_hard), ContractError);
}

TEST_CASE("all loss components are finite and non-negative") {
  auto arch = tiny_arch();
  auto m = ModelBundle::init(arch, 29);
  auto s = rand_sample(arch, 290);
  Rng rng(291);
  auto he = generate_hard_examples(m, s.image, s.label, rng);
  auto g = cooperative_loss_graph(m, s, he);
  for (auto& [n, t] : g.components) {
    CHECK(std::isfinite(t->value[0]));
    CHECK(t->value[0] >= 0.f);
  }
}
