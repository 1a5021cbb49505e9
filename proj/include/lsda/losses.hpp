#pragma once

#include "lsda/masking.hpp"
#include "lsda/networks.hpp"
#include "lsda/synthdata.hpp"

namespace lsda {

// Optional term weights; the objective itself is the unweighted sum.
struct LossWeights {
  float rec = 1.f, seg = 1.f, shp = 1.f;
  float hard = 1.f;  // extra factor on every hard-example component
};

struct LossReport {
  double total = 0.0;
  std::vector<std::pair<std::string, double>> components;
  double component(const std::string& name) const;
};

// Per-sample loss graph: named component nodes plus their sum.
struct LossGraph {
  TensorPtr total;
  std::vector<std::pair<std::string, TensorPtr>> components;
};

// rec + seg + shp(p',y) + shp(y',y) on one clean sample.
LossGraph standard_loss_graph(const ModelBundle& m, const Sample& s,
                              const LossWeights& w = {});

// hard_rec + hard_seg + hard_shp(C(p_hat),y) + hard_shp(C(p_bar),y); the
// reconstruction target is the clean x and all segmentation targets the
// clean y. x_hat/p_hat enter as constants.
LossGraph hard_loss_graph(const ModelBundle& m, const Sample& s,
                          const HardExample& he, const LossWeights& w = {});

// standard + hard, components concatenated.
LossGraph cooperative_loss_graph(const ModelBundle& m, const Sample& s,
                                 const HardExample& he,
                                 const LossWeights& w = {});

// Batch-mean reports (arithmetic mean over samples, fixed order).
LossReport standard_loss(const ModelBundle& m, const std::vector<Sample>& batch,
                         const LossWeights& w = {});
LossReport hard_loss(const ModelBundle& m, const std::vector<Sample>& batch,
                     const std::vector<HardExample>& hard,
                     const LossWeights& w = {});
LossReport cooperative_loss(const ModelBundle& m,
                            const std::vector<Sample>& batch,
                            const std::vector<HardExample>& hard,
                            const LossWeights& w = {});

}  // namespace lsda
