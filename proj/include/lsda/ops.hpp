#pragma once

#include "lsda/tensor.hpp"

namespace lsda {

// Cross-correlation (no kernel flip): x [cin,h,w], w [cout,cin,k,k], b [cout].
TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                 int stride = 1, int pad = 0);

TensorPtr relu(const TensorPtr& x);     // derivative at 0 defined as 0
TensorPtr sigmoid(const TensorPtr& x);
TensorPtr add(const TensorPtr& a, const TensorPtr& b);  // same shape
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);  // elementwise
TensorPtr scale(const TensorPtr& x, float c);
TensorPtr sum(const TensorPtr& x);  // -> scalar

// Nearest-neighbour 2x spatial upsampling of [c,h,w].
TensorPtr upsample2x(const TensorPtr& x);

// 2x2 mean pooling of [c,h,w]; h and w must be even.
TensorPtr avgpool2x(const TensorPtr& x);

// Per-pixel softmax over the channel axis of [C,h,w].
TensorPtr softmax_channels(const TensorPtr& x);

// mean((a-b)^2) over all elements -> scalar
TensorPtr mse_loss(const TensorPtr& a, const TensorPtr& b);

// Mean over pixels of -sum_c y_c * ln(p_c + eps); p are probabilities
// [C,h,w], y a one-hot map of the same shape.
TensorPtr cross_entropy_loss(const TensorPtr& p, const TensorPtr& y,
                             float eps = 1e-8f);

// Value copy detached from the graph (no parents, no grad flow).
TensorPtr detach(const TensorPtr& x);

}  // namespace lsda
