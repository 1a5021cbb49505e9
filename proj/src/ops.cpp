#include "lsda/ops.hpp"

#include <cmath>
#include <cstring>

#include "lsda/kernels.hpp"

namespace lsda {
namespace {

void require_same_shape(const TensorPtr& a, const TensorPtr& b,
                        const char* op) {
  if (a->shape != b->shape)
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a->shape) + " vs " + shape_str(b->shape));
}

TensorPtr make_child(Shape shape, std::vector<TensorPtr> parents) {
  auto t = std::make_shared<Node>();
  t->shape = std::move(shape);
  t->value.assign(t->numel(), 0.f);
  t->parents = std::move(parents);
  return t;
}

}  // namespace

TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                 int stride, int pad) {
  if (x->shape.size() != 3)
    throw DimensionError("conv2d: input must be rank-3 [cin,h,w], got " +
                         shape_str(x->shape));
  if (w->shape.size() != 4)
    throw DimensionError("conv2d: weight must be rank-4 [cout,cin,k,k], got " +
                         shape_str(w->shape));
  kernels::Conv2dDims d;
  d.cin = x->shape[0];
  d.h = x->shape[1];
  d.w = x->shape[2];
  d.cout = w->shape[0];
  d.k = w->shape[2];
  d.stride = stride;
  d.pad = pad;
  if (w->shape[1] != d.cin)
    throw DimensionError("conv2d: weight axis 1 (" +
                         std::to_string(w->shape[1]) +
                         ") != input channels (" + std::to_string(d.cin) + ")");
  if (w->shape[3] != d.k)
    throw DimensionError("conv2d: kernel must be square, got " +
                         shape_str(w->shape));
  if (d.k % 2 == 0) throw ContractError("conv2d: kernel size must be odd");
  if (stride < 1 || pad < 0)
    throw ContractError("conv2d: stride must be >= 1 and pad >= 0");
  if (b->shape != Shape{d.cout})
    throw DimensionError("conv2d: bias axis 0 (" + shape_str(b->shape) +
                         ") != output channels (" + std::to_string(d.cout) +
                         ")");
  const int hnum = d.h + 2 * pad - d.k;
  const int wnum = d.w + 2 * pad - d.k;
  if (hnum < 0 || wnum < 0 || hnum % stride != 0 || wnum % stride != 0)
    throw DimensionError("conv2d: spatial dims " + shape_str(x->shape) +
                         " not compatible with k=" + std::to_string(d.k) +
                         " stride=" + std::to_string(stride) +
                         " pad=" + std::to_string(pad));
  d.hout = hnum / stride + 1;
  d.wout = wnum / stride + 1;

  auto out = make_child({d.cout, d.hout, d.wout}, {x, w, b});
  kernels::conv2d_forward(x->value.data(), w->value.data(), b->value.data(),
                          out->value.data(), d);
  Node* xp = x.get();
  Node* wp = w.get();
  out->backprop = [xp, wp, d](const float* gout,
                              const std::vector<float*>& gp) {
    kernels::conv2d_backward_input(gout, wp->value.data(), gp[0], d);
    kernels::conv2d_backward_weight(gout, xp->value.data(), gp[1], gp[2], d);
  };
  return out;
}

TensorPtr relu(const TensorPtr& x) {
  auto out = make_child(x->shape, {x});
  out->name = "relu";  // lets tooling find kink locations in a built graph
  const size_t n = x->numel();
  for (size_t i = 0; i < n; ++i)
    out->value[i] = x->value[i] > 0.f ? x->value[i] : 0.f;
  Node* xp = x.get();
  out->backprop = [xp, n](const float* gout, const std::vector<float*>& gp) {
    for (size_t i = 0; i < n; ++i)
      if (xp->value[i] > 0.f) gp[0][i] += gout[i];
  };
  return out;
}

TensorPtr sigmoid(const TensorPtr& x) {
  auto out = make_child(x->shape, {x});
  const size_t n = x->numel();
  for (size_t i = 0; i < n; ++i)
    out->value[i] = 1.f / (1.f + std::exp(-x->value[i]));
  Node* op = out.get();
  out->backprop = [op, n](const float* gout, const std::vector<float*>& gp) {
    for (size_t i = 0; i < n; ++i) {
      const float s = op->value[i];
      gp[0][i] += gout[i] * s * (1.f - s);
    }
  };
  return out;
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(a, b, "add");
  auto out = make_child(a->shape, {a, b});
  const size_t n = a->numel();
  for (size_t i = 0; i < n; ++i) out->value[i] = a->value[i] + b->value[i];
  out->backprop = [n](const float* gout, const std::vector<float*>& gp) {
    for (size_t i = 0; i < n; ++i) {
      gp[0][i] += gout[i];
      gp[1][i] += gout[i];
    }
  };
  return out;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(a, b, "mul");
  auto out = make_child(a->shape, {a, b});
  const size_t n = a->numel();
  for (size_t i = 0; i < n; ++i) out->value[i] = a->value[i] * b->value[i];
  Node* ap = a.get();
  Node* bp = b.get();
  out->backprop = [ap, bp, n](const float* gout,
                              const std::vector<float*>& gp) {
    for (size_t i = 0; i < n; ++i) {
      gp[0][i] += gout[i] * bp->value[i];
      gp[1][i] += gout[i] * ap->value[i];
    }
  };
  return out;
}

TensorPtr scale(const TensorPtr& x, float c) {
  auto out = make_child(x->shape, {x});
  const size_t n = x->numel();
  for (size_t i = 0; i < n; ++i) out->value[i] = c * x->value[i];
  out->backprop = [c, n](const float* gout, const std::vector<float*>& gp) {
    for (size_t i = 0; i < n; ++i) gp[0][i] += c * gout[i];
  };
  return out;
}

TensorPtr sum(const TensorPtr& x) {
  auto out = make_child({1}, {x});
  double acc = 0.0;
  for (float v : x->value) acc += v;
  out->value[0] = static_cast<float>(acc);
  const size_t n = x->numel();
  out->backprop = [n](const float* gout, const std::vector<float*>& gp) {
    for (size_t i = 0; i < n; ++i) gp[0][i] += gout[0];
  };
  return out;
}

TensorPtr upsample2x(const TensorPtr& x) {
  if (x->shape.size() != 3)
    throw DimensionError("upsample2x: expected [c,h,w], got " +
                         shape_str(x->shape));
  const int c = x->shape[0], h = x->shape[1], w = x->shape[2];
  auto out = make_child({c, 2 * h, 2 * w}, {x});
  for (int ci = 0; ci < c; ++ci)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const float v = x->value[(ci * h + i) * w + j];
        const size_t base = (static_cast<size_t>(ci) * 2 * h + 2 * i) * 2 * w;
        out->value[base + 2 * j] = v;
        out->value[base + 2 * j + 1] = v;
        out->value[base + 2 * w + 2 * j] = v;
        out->value[base + 2 * w + 2 * j + 1] = v;
      }
  out->backprop = [c, h, w](const float* gout, const std::vector<float*>& gp) {
    for (int ci = 0; ci < c; ++ci)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
          const size_t base =
              (static_cast<size_t>(ci) * 2 * h + 2 * i) * 2 * w;
          gp[0][(ci * h + i) * w + j] +=
              gout[base + 2 * j] + gout[base + 2 * j + 1] +
              gout[base + 2 * w + 2 * j] + gout[base + 2 * w + 2 * j + 1];
        }
  };
  return out;
}

TensorPtr avgpool2x(const TensorPtr& x) {
  if (x->shape.size() != 3 || x->shape[1] % 2 != 0 || x->shape[2] % 2 != 0)
    throw DimensionError("avgpool2x: expected [c,even,even], got " +
                         shape_str(x->shape));
  const int c = x->shape[0], h = x->shape[1] / 2, w = x->shape[2] / 2;
  auto out = make_child({c, h, w}, {x});
  for (int ci = 0; ci < c; ++ci)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const size_t base = (static_cast<size_t>(ci) * 2 * h + 2 * i) * 2 * w;
        out->value[(ci * h + i) * w + j] =
            0.25f * (x->value[base + 2 * j] + x->value[base + 2 * j + 1] +
                     x->value[base + 2 * w + 2 * j] +
                     x->value[base + 2 * w + 2 * j + 1]);
      }
  out->backprop = [c, h, w](const float* gout, const std::vector<float*>& gp) {
    for (int ci = 0; ci < c; ++ci)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
          const float g = 0.25f * gout[(ci * h + i) * w + j];
          const size_t base =
              (static_cast<size_t>(ci) * 2 * h + 2 * i) * 2 * w;
          gp[0][base + 2 * j] += g;
          gp[0][base + 2 * j + 1] += g;
          gp[0][base + 2 * w + 2 * j] += g;
          gp[0][base + 2 * w + 2 * j + 1] += g;
        }
  };
  return out;
}

TensorPtr softmax_channels(const TensorPtr& x) {
  if (x->shape.size() != 3)
    throw DimensionError("softmax_channels: expected [C,h,w], got " +
                         shape_str(x->shape));
  const int C = x->shape[0];
  const int hw = x->shape[1] * x->shape[2];
  auto out = make_child(x->shape, {x});
  for (int p = 0; p < hw; ++p) {
    float mx = x->value[p];
    for (int c = 1; c < C; ++c) mx = std::max(mx, x->value[c * hw + p]);
    float denom = 0.f;
    for (int c = 0; c < C; ++c) {
      const float e = std::exp(x->value[c * hw + p] - mx);
      out->value[c * hw + p] = e;
      denom += e;
    }
    for (int c = 0; c < C; ++c) out->value[c * hw + p] /= denom;
  }
  Node* op = out.get();
  out->backprop = [op, C, hw](const float* gout,
                              const std::vector<float*>& gp) {
    for (int p = 0; p < hw; ++p) {
      float dot = 0.f;
      for (int c = 0; c < C; ++c)
        dot += gout[c * hw + p] * op->value[c * hw + p];
      for (int c = 0; c < C; ++c)
        gp[0][c * hw + p] +=
            op->value[c * hw + p] * (gout[c * hw + p] - dot);
    }
  };
  return out;
}

TensorPtr mse_loss(const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(a, b, "mse_loss");
  auto out = make_child({1}, {a, b});
  const size_t n = a->numel();
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dft = static_cast<double>(a->value[i]) - b->value[i];
    acc += dft * dft;
  }
  out->value[0] = static_cast<float>(acc / static_cast<double>(n));
  Node* ap = a.get();
  Node* bp = b.get();
  out->backprop = [ap, bp, n](const float* gout,
                              const std::vector<float*>& gp) {
    const float c = 2.f / static_cast<float>(n) * gout[0];
    for (size_t i = 0; i < n; ++i) {
      const float dft = ap->value[i] - bp->value[i];
      gp[0][i] += c * dft;
      gp[1][i] -= c * dft;
    }
  };
  return out;
}

TensorPtr cross_entropy_loss(const TensorPtr& p, const TensorPtr& y,
                             float eps) {
  require_same_shape(p, y, "cross_entropy_loss");
  if (p->shape.size() != 3)
    throw DimensionError("cross_entropy_loss: expected [C,h,w], got " +
                         shape_str(p->shape));
  const size_t n = p->numel();
  const int npix = p->shape[1] * p->shape[2];
  auto out = make_child({1}, {p, y});
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i)
    if (y->value[i] != 0.f)
      acc -= y->value[i] * std::log(static_cast<double>(p->value[i]) + eps);
  out->value[0] = static_cast<float>(acc / npix);
  Node* pp = p.get();
  Node* yp = y.get();
  out->backprop = [pp, yp, n, npix, eps](const float* gout,
                                         const std::vector<float*>& gp) {
    const float c = gout[0] / static_cast<float>(npix);
    for (size_t i = 0; i < n; ++i) {
      if (yp->value[i] != 0.f)
        gp[0][i] -= c * yp->value[i] / (pp->value[i] + eps);
      gp[1][i] -= c * std::log(pp->value[i] + eps);
    }
  };
  return out;
}

TensorPtr detach(const TensorPtr& x) {
  auto t = std::make_shared<Node>();
  t->shape = x->shape;
  t->value = x->value;
  return t;
}

}  // namespace lsda
