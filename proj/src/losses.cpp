#include "lsda/losses.hpp"

namespace lsda {
namespace {

TensorPtr sum_components(const LossGraph& g) {
  TensorPtr total = g.components[0].second;
  for (size_t i = 1; i < g.components.size(); ++i)
    total = add(total, g.components[i].second);
  return total;
}

LossReport batch_mean(
    const std::vector<LossGraph>& graphs) {
  LossReport rep;
  if (graphs.empty()) return rep;
  for (const auto& [name, node] : graphs[0].components)
    rep.components.emplace_back(name, 0.0);
  for (const auto& g : graphs)
    for (size_t i = 0; i < g.components.size(); ++i)
      rep.components[i].second += g.components[i].second->value[0];
  for (auto& [name, v] : rep.components) {
    v /= static_cast<double>(graphs.size());
    rep.total += v;
  }
  return rep;
}

}  // namespace

double LossReport::component(const std::string& name) const {
  for (const auto& [n, v] : components)
    if (n == name) return v;
  throw ContractError("LossReport: no component '" + name + "'");
}

LossGraph standard_loss_graph(const ModelBundle& m, const Sample& s,
                              const LossWeights& w) {
  const auto& cfg = m.config;
  auto x = make_tensor({1, cfg.image_h, cfg.image_w}, s.image);
  auto y = one_hot(s.label, cfg.num_classes, cfg.image_h, cfg.image_w);

  auto z_i = encode(m, x);
  auto x_rec = decode_image(m, z_i);
  auto p = decode_seg(m, decouple(m, z_i));
  auto p_prime = shape_correct(m, p);
  auto y_prime = shape_correct(m, y);

  LossGraph g;
  g.components.emplace_back("rec", scale(mse_loss(x_rec, x), w.rec));
  g.components.emplace_back("seg", scale(cross_entropy_loss(p, y), w.seg));
  g.components.emplace_back("shp_pprime",
                            scale(cross_entropy_loss(p_prime, y), w.shp));
  g.components.emplace_back("shp_yprime",
                            scale(cross_entropy_loss(y_prime, y), w.shp));
  g.total = sum_components(g);
  return g;
}

LossGraph hard_loss_graph(const ModelBundle& m, const Sample& s,
                          const HardExample& he, const LossWeights& w) {
  const auto& cfg = m.config;
  auto x = make_tensor({1, cfg.image_h, cfg.image_w}, s.image);
  auto y = one_hot(s.label, cfg.num_classes, cfg.image_h, cfg.image_w);
  auto x_hat = make_tensor({1, cfg.image_h, cfg.image_w}, he.x_hat);
  auto p_hat =
      make_tensor({cfg.num_classes, cfg.image_h, cfg.image_w}, he.p_hat);

  auto z_i = encode(m, x_hat);
  auto x_rec = decode_image(m, z_i);           // reconstruction target: clean x
  auto p_bar = decode_seg(m, decouple(m, z_i));

  LossGraph g;
  g.components.emplace_back("hard_rec",
                            scale(mse_loss(x_rec, x), w.hard * w.rec));
  g.components.emplace_back(
      "hard_seg", scale(cross_entropy_loss(p_bar, y), w.hard * w.seg));
  g.components.emplace_back(
      "hard_shp_phat",
      scale(cross_entropy_loss(shape_correct(m, p_hat), y), w.hard * w.shp));
  g.components.emplace_back(
      "hard_shp_pbar",
      scale(cross_entropy_loss(shape_correct(m, p_bar), y), w.hard * w.shp));
  g.total = sum_components(g);
  return g;
}

LossGraph cooperative_loss_graph(const ModelBundle& m, const Sample& s,
                                 const HardExample& he, const LossWeights& w) {
  LossGraph g = standard_loss_graph(m, s, w);
  LossGraph h = hard_loss_graph(m, s, he, w);
  for (auto& c : h.components) g.components.push_back(std::move(c));
  g.total = add(g.total, h.total);
  return g;
}

LossReport standard_loss(const ModelBundle& m, const std::vector<Sample>& batch,
                         const LossWeights& w) {
  std::vector<LossGraph> graphs;
  graphs.reserve(batch.size());
  for (const auto& s : batch) graphs.push_back(standard_loss_graph(m, s, w));
  return batch_mean(graphs);
}

LossReport hard_loss(const ModelBundle& m, const std::vector<Sample>& batch,
                     const std::vector<HardExample>& hard,
                     const LossWeights& w) {
  if (batch.size() != hard.size())
    throw ContractError("hard_loss: batch and hard-example counts differ");
  std::vector<LossGraph> graphs;
  graphs.reserve(batch.size());
  for (size_t i = 0; i < batch.size(); ++i)
    graphs.push_back(hard_loss_graph(m, batch[i], hard[i], w));
  return batch_mean(graphs);
}

LossReport cooperative_loss(const ModelBundle& m,
                            const std::vector<Sample>& batch,
                            const std::vector<HardExample>& hard,
                            const LossWeights& w) {
  if (batch.size() != hard.size())
    throw ContractError("cooperative_loss: batch and hard-example counts differ");
  std::vector<LossGraph> graphs;
  graphs.reserve(batch.size());
  for (size_t i = 0; i < batch.size(); ++i)
    graphs.push_back(cooperative_loss_graph(m, batch[i], hard[i], w));
  return batch_mean(graphs);
}

}  // namespace lsda
