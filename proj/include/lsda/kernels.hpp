#pragma once

// Dense conv2d kernels (cross-correlation, no kernel flip).
//
// Each kernel comes in two variants: an OpenMP-parallel one used by the
// engine and a serial reference kept for testing and benchmarking. The
// parallel loops are gather-style — every output element is owned by
// exactly one thread and accumulated in a fixed order — so results do not
// depend on the thread count.

namespace lsda::kernels {

struct Conv2dDims {
  int cin, h, w;      // input
  int cout, k;        // weight [cout, cin, k, k]
  int stride, pad;
  int hout, wout;     // output
};

void conv2d_forward(const float* x, const float* wgt, const float* bias,
                    float* y, const Conv2dDims& d);
void conv2d_forward_serial(const float* x, const float* wgt, const float* bias,
                           float* y, const Conv2dDims& d);

// gx += dL/dx given gy = dL/dy
void conv2d_backward_input(const float* gy, const float* wgt, float* gx,
                           const Conv2dDims& d);
void conv2d_backward_input_serial(const float* gy, const float* wgt, float* gx,
                                  const Conv2dDims& d);

// gw += dL/dw, gb += dL/db
void conv2d_backward_weight(const float* gy, const float* x, float* gw,
                            float* gb, const Conv2dDims& d);
void conv2d_backward_weight_serial(const float* gy, const float* x, float* gw,
                                   float* gb, const Conv2dDims& d);

}  // namespace lsda::kernels
