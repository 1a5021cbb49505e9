#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "lsda/gradcheck.hpp"
#include "lsda/ops.hpp"
#include "lsda/rng.hpp"
#include "lsda/tensor.hpp"

using namespace lsda;

namespace {

TensorPtr randn_tensor(Shape shape, uint64_t seed, bool requires_grad = true,
                       float scale = 1.f) {
  Rng rng(seed);
  std::vector<float> v(shape_numel(shape));
  for (auto& x : v) x = scale * static_cast<float>(rng.normal());
  return make_tensor(std::move(shape), std::move(v), requires_grad);
}

// Finite-difference points live in well-conditioned ranges (positive inputs,
// as for [0,1] images): per-coordinate relative error in single precision is
// only meaningful when gradients are not vanishingly small by cancellation.
TensorPtr randu_tensor(Shape shape, uint64_t seed, float lo, float hi) {
  Rng rng(seed);
  std::vector<float> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return make_tensor(std::move(shape), std::move(v), true);
}

}  // namespace

TEST_CASE("1x1 conv on a scalar input is plain multiplication") {
  // x = [[2]], w = 3, b = 0 -> y = [[6]]; dL/dx = w, dL/dw = x for L = y.
  auto x = make_tensor({1, 1, 1}, {2.f}, true);
  auto w = make_tensor({1, 1, 1, 1}, {3.f}, true);
  auto b = make_tensor({1}, {0.f}, true);
  auto y = conv2d(x, w, b);
  CHECK(y->value[0] == doctest::Approx(6.f));
  auto g = backward(sum(y));
  CHECK(g.at(x)[0] == doctest::Approx(3.f));
  CHECK(g.at(w)[0] == doctest::Approx(2.f));
  CHECK(g.at(b)[0] == doctest::Approx(1.f));
}

TEST_CASE("identity kernel reproduces the input") {
  // 3x3 kernel with a single 1 in the centre, pad 1 -> y == x exactly.
  auto x = randn_tensor({1, 5, 5}, 3);
  std::vector<float> wv(9, 0.f);
  wv[4] = 1.f;
  auto w = make_tensor({1, 1, 3, 3}, wv);
  auto b = make_tensor({1}, {0.f});
  auto y = conv2d(x, w, b, 1, 1);
  REQUIRE(y->value.size() == x->value.size());
  for (size_t i = 0; i < x->value.size(); ++i)
    CHECK(y->value[i] == x->value[i]);
}

TEST_CASE("conv2d forward matches independent nested-loop oracle") {
  Rng rng(7);
  int cin = 3, h = 7, w = 9, cout = 4, k = 3, stride = 2, pad = 1;
  auto xt = randn_tensor({cin, h, w}, 101);
  auto wt = randn_tensor({cout, cin, k, k}, 102);
  auto bt = randn_tensor({cout}, 103);
  auto y = conv2d(xt, wt, bt, stride, pad);
  int hout = (h + 2 * pad - k) / stride + 1;
  int wout = (w + 2 * pad - k) / stride + 1;
  REQUIRE(y->shape == Shape{cout, hout, wout});
  for (int co = 0; co < cout; ++co)
    for (int oy = 0; oy < hout; ++oy)
      for (int ox = 0; ox < wout; ++ox) {
        double acc = bt->value[co];
        for (int ci = 0; ci < cin; ++ci)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              int iy = oy * stride - pad + ky;
              int ix = ox * stride - pad + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += static_cast<double>(xt->value[(ci * h + iy) * w + ix]) *
                     wt->value[((co * cin + ci) * k + ky) * k + kx];
            }
        CHECK(std::abs(y->value[(co * hout + oy) * wout + ox] - acc) <= 1e-5);
      }
}

TEST_CASE("backward of sum(x) and sum(x*x)") {
  auto x = make_tensor({2, 2}, {1.f, -2.f, 3.f, 0.5f}, true);
  auto g1 = backward(sum(x));
  for (float gi : g1.at(x)) CHECK(gi == doctest::Approx(1.f));
  auto g2 = backward(sum(mul(x, x)));
  for (size_t i = 0; i < 4; ++i)
    CHECK(g2.at(x)[i] == doctest::Approx(2.f * x->value[i]));
}

TEST_CASE("finite differences confirm conv2d gradients for x, w and b") {
  auto xt = randu_tensor({2, 5, 5}, 204, 0.2f, 1.2f);
  auto wt = randu_tensor({2, 2, 3, 3}, 202, 0.05f, 0.45f);
  auto bt = randu_tensor({2}, 203, 0.f, 0.3f);

  auto through_x = [&](const TensorPtr& leaf) {
    auto y = conv2d(leaf, wt, bt, 1, 1);
    return mse_loss(y, make_tensor(y->shape, -1.f));
  };
  auto rx = grad_check(through_x, xt, 1e-3, 1e-2);
  CHECK(rx.pass);
  CHECK(rx.checked == xt->numel());

  auto through_w = [&](const TensorPtr& leaf) {
    auto y = conv2d(xt, leaf, bt, 1, 1);
    return mse_loss(y, make_tensor(y->shape, -1.f));
  };
  CHECK(grad_check(through_w, wt, 1e-3, 1e-2).pass);

  auto through_b = [&](const TensorPtr& leaf) {
    auto y = conv2d(xt, wt, leaf, 1, 1);
    return mse_loss(y, make_tensor(y->shape, -1.f));
  };
  CHECK(grad_check(through_b, bt, 1e-3, 1e-2).pass);
}

TEST_CASE("finite differences for the pointwise and reduction ops") {
  auto xt = randu_tensor({3, 4, 4}, 303, -1.5f, 1.5f);

  CHECK(grad_check([](const TensorPtr& t) { return sum(sigmoid(t)); }, xt,
                   1e-3, 1e-2)
            .pass);
  CHECK(grad_check([](const TensorPtr& t) { return sum(avgpool2x(t)); }, xt,
                   1e-3, 1e-2)
            .pass);
  CHECK(grad_check([](const TensorPtr& t) { return sum(upsample2x(t)); }, xt,
                   1e-3, 1e-2)
            .pass);

  // ReLU: exclude coordinates near the kink, where central differences lie;
  // the 0.5x term keeps every other coordinate's gradient well clear of 0.
  auto excl = [&](size_t i) { return std::abs(xt->value[i]) < 5e-3f; };
  CHECK(grad_check(
            [](const TensorPtr& t) { return sum(add(relu(t), scale(t, 0.5f))); },
            xt, 1e-3, 1e-2, excl)
            .pass);
}

TEST_CASE("cross entropy gradient matches finite differences") {
  auto logits = randn_tensor({4, 3, 3}, 404, true, 0.6f);
  std::vector<float> yv(4 * 9, 0.f);
  Rng rng(405);
  for (int p = 0; p < 9; ++p) yv[rng.uniform_int(4) * 9 + p] = 1.f;
  auto y = make_tensor({4, 3, 3}, yv);
  auto f = [&](const TensorPtr& t) {
    return cross_entropy_loss(softmax_channels(t), y);
  };
  CHECK(grad_check(f, logits, 1e-3, 1e-2).pass);
}

TEST_CASE("repeated backward passes give identical gradients") {
  auto x = randn_tensor({2, 8, 8}, 505);
  auto w = randn_tensor({3, 2, 3, 3}, 506, true, 0.4f);
  auto b = randn_tensor({3}, 507, true, 0.4f);
  auto build = [&] {
    auto y = relu(conv2d(x, w, b, 1, 1));
    return mse_loss(y, make_tensor(y->shape, 0.2f));
  };
  auto g1 = backward(build());
  auto g2 = backward(build());
  CHECK(g1.at(w) == g2.at(w));
  CHECK(g1.at(b) == g2.at(b));
  CHECK(g1.at(x) == g2.at(x));
}

TEST_CASE("nodes the loss does not reach get no gradient entry") {
  auto a = make_tensor({2}, {1.f, 2.f}, true);
  auto b = make_tensor({2}, {3.f, 4.f}, true);
  auto loss = sum(mul(a, a));  // b never used
  auto g = backward(loss);
  CHECK(g.contains(a));
  CHECK_FALSE(g.contains(b));
  CHECK_THROWS_AS((void)g.at(b), ContractError);
}

TEST_CASE("detach blocks gradient flow but keeps values") {
  auto a = make_tensor({2}, {1.5f, -0.5f}, true);
  auto d = detach(a);
  CHECK(d->value == a->value);
  auto g = backward(sum(mul(d, d)));
  CHECK_FALSE(g.contains(a));
}

TEST_CASE("marked interior nodes receive gradients") {
  auto x = make_tensor({3}, {1.f, 2.f, 3.f}, true);
  auto mid = scale(x, 2.f);
  auto loss = sum(mul(mid, mid));  // L = sum((2x)^2), dL/dmid = 2*mid
  auto g = backward(loss, {mid});
  REQUIRE(g.contains(mid));
  for (size_t i = 0; i < 3; ++i)
    CHECK(g.at(mid)[i] == doctest::Approx(2.f * mid->value[i]));
}

TEST_CASE("diamond-shaped graphs accumulate along both paths") {
  // L = sum(x*x + 3x) -> dL/dx = 2x + 3.
  auto x = make_tensor({3}, {1.f, -1.f, 4.f}, true);
  auto loss = sum(add(mul(x, x), scale(x, 3.f)));
  auto g = backward(loss);
  for (size_t i = 0; i < 3; ++i)
    CHECK(g.at(x)[i] == doctest::Approx(2.f * x->value[i] + 3.f));
}

TEST_CASE("grad_check rejects a non-deterministic function") {
  auto x = make_tensor({2}, {1.f, 2.f}, true);
  int calls = 0;
  auto f = [&](const TensorPtr& t) {
    return scale(sum(t), 1.f + 0.1f * static_cast<float>(calls++));
  };
  CHECK_THROWS_AS(grad_check(f, x, 1e-3, 1e-2), OracleError);
}

TEST_CASE("shape validation raises DimensionError") {
  auto x = make_tensor({2, 5, 5}, 0.f);
  auto w = make_tensor({3, 4, 3, 3}, 0.f);  // cin mismatch
  auto b = make_tensor({3}, 0.f);
  CHECK_THROWS_AS(conv2d(x, w, b, 1, 1), DimensionError);
  auto a2 = make_tensor({3}, 0.f);
  auto b2 = make_tensor({4}, 0.f);
  CHECK_THROWS_AS(add(a2, b2), DimensionError);
  // avgpool needs even spatial dims.
  CHECK_THROWS_AS(avgpool2x(make_tensor({1, 5, 4}, 0.f)), DimensionError);
}
