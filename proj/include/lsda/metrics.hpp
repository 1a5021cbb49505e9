#pragma once

#include "lsda/networks.hpp"
#include "lsda/synthdata.hpp"

namespace lsda {

enum class EvalStage { ftn, ftn_stn };

EvalStage eval_stage_from_name(const std::string& name);  // "ftn" | "ftn+stn"
const char* eval_stage_name(EvalStage s);

// 2|P∩G| / (|P|+|G|); both sets empty -> 1.0 by convention.
double dice(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& gt,
            int class_id);

struct DomainReport {
  std::string domain;
  std::vector<double> per_class_dice;   // indexed by class id, mean over samples
  double mean_foreground_dice = 0.0;    // classes 1..C-1
  int sample_count = 0;
  std::vector<double> per_sample_fg;    // per-sample mean foreground Dice
};

struct EvalReport {
  EvalStage stage = EvalStage::ftn;
  std::vector<DomainReport> domains;
};

EvalReport evaluate(const ModelBundle& m, const std::vector<Dataset>& datasets,
                    EvalStage stage);

}  // namespace lsda
