#include "lsda/metrics.hpp"

namespace lsda {

EvalStage eval_stage_from_name(const std::string& name) {
  if (name == "ftn") return EvalStage::ftn;
  if (name == "ftn+stn") return EvalStage::ftn_stn;
  throw ContractError("unknown eval stage '" + name + "'");
}

const char* eval_stage_name(EvalStage s) {
  return s == EvalStage::ftn ? "ftn" : "ftn+stn";
}

double dice(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& gt,
            int class_id) {
  if (pred.size() != gt.size())
    throw DimensionError("dice: label maps differ in size");
  size_t np = 0, ng = 0, inter = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == class_id;
    const bool g = gt[i] == class_id;
    np += p;
    ng += g;
    inter += p && g;
  }
  if (np + ng == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(np + ng);
}

EvalReport evaluate(const ModelBundle& m, const std::vector<Dataset>& datasets,
                    EvalStage stage) {
  EvalReport rep;
  rep.stage = stage;
  const int C = m.config.num_classes;
  for (const auto& ds : datasets) {
    DomainReport dom;
    dom.domain = ds.split_tag;
    dom.per_class_dice.assign(C, 0.0);
    dom.sample_count = static_cast<int>(ds.size());
    for (const auto& s : ds.samples) {
      auto x = make_tensor({1, ds.height, ds.width}, s.image);
      auto prob = stage == EvalStage::ftn ? ftn_predict(m, x)
                                          : full_predict(m, x);
      auto pred = argmax_channels(*prob);
      double fg = 0.0;
      for (int c = 0; c < C; ++c) {
        const double d = dice(pred, s.label, c);
        dom.per_class_dice[c] += d;
        if (c > 0) fg += d;
      }
      dom.per_sample_fg.push_back(fg / (C - 1));
    }
    if (dom.sample_count > 0) {
      for (auto& d : dom.per_class_dice) d /= dom.sample_count;
      for (double d : dom.per_sample_fg) dom.mean_foreground_dice += d;
      dom.mean_foreground_dice /= dom.sample_count;
    }
    rep.domains.push_back(std::move(dom));
  }
  return rep;
}

}  // namespace lsda
