#include "lsda/kernels.hpp"

#include <cstring>

namespace lsda::kernels {
namespace {

// Valid output index range for one kernel tap: 0 <= o*stride - pad + u < in_dim.
inline void out_range(int u, int pad, int stride, int in_dim, int out_dim,
                      int& lo, int& hi) {
  lo = 0;
  int num = pad - u;
  if (num > 0) lo = (num + stride - 1) / stride;
  int num2 = in_dim - 1 + pad - u;
  hi = num2 < 0 ? 0 : num2 / stride + 1;
  if (hi > out_dim) hi = out_dim;
  if (hi < lo) hi = lo;
}

inline void forward_one_cout(const float* x, const float* wgt,
                             const float* bias, float* y, const Conv2dDims& d,
                             int co) {
  const int plane = d.hout * d.wout;
  float* yp = y + static_cast<long>(co) * plane;
  for (int i = 0; i < plane; ++i) yp[i] = bias[co];
  for (int ci = 0; ci < d.cin; ++ci) {
    const float* xp = x + static_cast<long>(ci) * d.h * d.w;
    const float* wp = wgt + (static_cast<long>(co) * d.cin + ci) * d.k * d.k;
    for (int u = 0; u < d.k; ++u) {
      int oi_lo, oi_hi;
      out_range(u, d.pad, d.stride, d.h, d.hout, oi_lo, oi_hi);
      for (int v = 0; v < d.k; ++v) {
        int oj_lo, oj_hi;
        out_range(v, d.pad, d.stride, d.w, d.wout, oj_lo, oj_hi);
        const float wv = wp[u * d.k + v];
        for (int oi = oi_lo; oi < oi_hi; ++oi) {
          const int ii = oi * d.stride - d.pad + u;
          const float* xrow = xp + static_cast<long>(ii) * d.w - d.pad + v;
          float* yrow = yp + static_cast<long>(oi) * d.wout;
          if (d.stride == 1) {
            for (int oj = oj_lo; oj < oj_hi; ++oj) yrow[oj] += wv * xrow[oj];
          } else {
            for (int oj = oj_lo; oj < oj_hi; ++oj)
              yrow[oj] += wv * xrow[oj * d.stride];
          }
        }
      }
    }
  }
}

inline void backward_input_one_cin(const float* gy, const float* wgt,
                                   float* gx, const Conv2dDims& d, int ci) {
  float* gxp = gx + static_cast<long>(ci) * d.h * d.w;
  for (int co = 0; co < d.cout; ++co) {
    const float* gyp = gy + static_cast<long>(co) * d.hout * d.wout;
    const float* wp = wgt + (static_cast<long>(co) * d.cin + ci) * d.k * d.k;
    for (int u = 0; u < d.k; ++u) {
      int oi_lo, oi_hi;
      out_range(u, d.pad, d.stride, d.h, d.hout, oi_lo, oi_hi);
      for (int v = 0; v < d.k; ++v) {
        int oj_lo, oj_hi;
        out_range(v, d.pad, d.stride, d.w, d.wout, oj_lo, oj_hi);
        const float wv = wp[u * d.k + v];
        for (int oi = oi_lo; oi < oi_hi; ++oi) {
          const int ii = oi * d.stride - d.pad + u;
          float* gxrow = gxp + static_cast<long>(ii) * d.w - d.pad + v;
          const float* gyrow = gyp + static_cast<long>(oi) * d.wout;
          if (d.stride == 1) {
            for (int oj = oj_lo; oj < oj_hi; ++oj) gxrow[oj] += wv * gyrow[oj];
          } else {
            for (int oj = oj_lo; oj < oj_hi; ++oj)
              gxrow[oj * d.stride] += wv * gyrow[oj];
          }
        }
      }
    }
  }
}

inline void backward_weight_one_cout(const float* gy, const float* x,
                                     float* gw, float* gb,
                                     const Conv2dDims& d, int co) {
  const float* gyp = gy + static_cast<long>(co) * d.hout * d.wout;
  double bacc = 0.0;
  for (int i = 0; i < d.hout * d.wout; ++i) bacc += gyp[i];
  gb[co] += static_cast<float>(bacc);
  for (int ci = 0; ci < d.cin; ++ci) {
    const float* xp = x + static_cast<long>(ci) * d.h * d.w;
    float* gwp = gw + (static_cast<long>(co) * d.cin + ci) * d.k * d.k;
    for (int u = 0; u < d.k; ++u) {
      int oi_lo, oi_hi;
      out_range(u, d.pad, d.stride, d.h, d.hout, oi_lo, oi_hi);
      for (int v = 0; v < d.k; ++v) {
        int oj_lo, oj_hi;
        out_range(v, d.pad, d.stride, d.w, d.wout, oj_lo, oj_hi);
        float acc = 0.f;
        for (int oi = oi_lo; oi < oi_hi; ++oi) {
          const int ii = oi * d.stride - d.pad + u;
          const float* xrow = xp + static_cast<long>(ii) * d.w - d.pad + v;
          const float* gyrow = gyp + static_cast<long>(oi) * d.wout;
          if (d.stride == 1) {
            for (int oj = oj_lo; oj < oj_hi; ++oj) acc += gyrow[oj] * xrow[oj];
          } else {
            for (int oj = oj_lo; oj < oj_hi; ++oj)
              acc += gyrow[oj] * xrow[oj * d.stride];
          }
        }
        gwp[u * d.k + v] += acc;
      }
    }
  }
}

}  // namespace

void conv2d_forward(const float* x, const float* wgt, const float* bias,
                    float* y, const Conv2dDims& d) {
#pragma omp parallel for schedule(static)
  for (int co = 0; co < d.cout; ++co) forward_one_cout(x, wgt, bias, y, d, co);
}

void conv2d_forward_serial(const float* x, const float* wgt, const float* bias,
                           float* y, const Conv2dDims& d) {
  for (int co = 0; co < d.cout; ++co) forward_one_cout(x, wgt, bias, y, d, co);
}

void conv2d_backward_input(const float* gy, const float* wgt, float* gx,
                           const Conv2dDims& d) {
#pragma omp parallel for schedule(static)
  for (int ci = 0; ci < d.cin; ++ci)
    backward_input_one_cin(gy, wgt, gx, d, ci);
}

void conv2d_backward_input_serial(const float* gy, const float* wgt, float* gx,
                                  const Conv2dDims& d) {
  for (int ci = 0; ci < d.cin; ++ci)
    backward_input_one_cin(gy, wgt, gx, d, ci);
}

void conv2d_backward_weight(const float* gy, const float* x, float* gw,
                            float* gb, const Conv2dDims& d) {
#pragma omp parallel for schedule(static)
  for (int co = 0; co < d.cout; ++co)
    backward_weight_one_cout(gy, x, gw, gb, d, co);
}

void conv2d_backward_weight_serial(const float* gy, const float* x, float* gw,
                                   float* gb, const Conv2dDims& d) {
  for (int co = 0; co < d.cout; ++co)
    backward_weight_one_cout(gy, x, gw, gb, d, co);
}

}  // namespace lsda::kernels
