#pragma once

#include <filesystem>
#include <optional>

#include "lsda/checkpoint.hpp"
#include "lsda/losses.hpp"
#include "lsda/metrics.hpp"

namespace lsda {

struct TrainConfig {
  enum class Mode { standard, cooperative };
  Mode mode = Mode::standard;
  double lr = 1e-4;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int batch_size = 20;  // clamped to the dataset size; incomplete tail batches
                        // are dropped
  int epochs = 200;
  bool augment = false;  // random dihedral flip/rotation of each sample draw;
                         // requires square images
  bool cosine_lr = false;  // cosine-decay lr from `lr` to 0 over all steps
  uint64_t seed = 0;
  int checkpoint_every = 50;  // epochs
  ArchConfig arch;
  MaskOptions mask;
  LossWeights weights;

  static const char* mode_name(Mode m) {
    return m == Mode::standard ? "standard" : "cooperative";
  }
  static Mode mode_from_name(const std::string& s);
};

struct AdamState {
  std::vector<std::vector<float>> m1, m2;  // per parameter, params() order
  int64_t t = 0;
};

// One Adam update with bias correction; grads must contain an entry for
// every parameter (ContractError naming the first missing one otherwise).
void adam_step(const std::vector<std::pair<std::string, TensorPtr>>& params,
               const GradientMap& grads, AdamState& state,
               const TrainConfig& cfg);

// Element k of the dihedral group of the square applied to a sample:
// bit 2 mirrors horizontally, bits 0-1 then rotate by that many quarter
// turns. k=0 is the identity. Throws ContractError unless h == w.
Sample dihedral_transform(const Sample& s, int h, int w, int k);

struct TrainResult {
  ModelBundle bundle;
  bool aborted = false;  // non-finite loss; last cadence checkpoint retained
  int steps = 0;
  std::filesystem::path final_checkpoint;
  std::filesystem::path best_val_checkpoint;  // empty when no val set given
};

// Writes out_dir/step_log.csv, cadence checkpoints (ckpt_last.lsda +
// train_state.bin), ckpt_final.lsda, and ckpt_best_val.lsda when `val` is
// given. With resume=true, picks up from out_dir/train_state.bin and
// reproduces the unbroken run bit-identically.
TrainResult train(const TrainConfig& cfg, const Dataset& train_ds,
                  const std::filesystem::path& out_dir,
                  const Dataset* val = nullptr, bool resume = false);

}  // namespace lsda
