#include "lsda/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace lsda {
namespace {

constexpr char kStateMagic[4] = {'L', 'S', 'D', 'T'};

void save_train_state(const std::filesystem::path& path, int next_epoch,
                      const AdamState& state) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("train state: cannot open " + path.string());
  os.write(kStateMagic, 4);
  const int32_t ep = next_epoch;
  os.write(reinterpret_cast<const char*>(&ep), sizeof(ep));
  os.write(reinterpret_cast<const char*>(&state.t), sizeof(state.t));
  for (const auto* moments : {&state.m1, &state.m2})
    for (const auto& buf : *moments)
      os.write(reinterpret_cast<const char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

int load_train_state(const std::filesystem::path& path, AdamState& state) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("train state: cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kStateMagic, 4) != 0)
    throw FormatError("train state: bad magic in " + path.string());
  int32_t ep;
  is.read(reinterpret_cast<char*>(&ep), sizeof(ep));
  is.read(reinterpret_cast<char*>(&state.t), sizeof(state.t));
  for (auto* moments : {&state.m1, &state.m2})
    for (auto& buf : *moments)
      if (!is.read(reinterpret_cast<char*>(buf.data()),
                   static_cast<std::streamsize>(buf.size() * sizeof(float))))
        throw FormatError("train state: truncated " + path.string());
  return ep;
}

std::vector<std::string> component_names(TrainConfig::Mode mode) {
  std::vector<std::string> names{"rec", "seg", "shp_pprime", "shp_yprime"};
  if (mode == TrainConfig::Mode::cooperative)
    for (const char* n :
         {"hard_rec", "hard_seg", "hard_shp_phat", "hard_shp_pbar"})
      names.push_back(n);
  return names;
}

}  // namespace

TrainConfig::Mode TrainConfig::mode_from_name(const std::string& s) {
  if (s == "standard") return Mode::standard;
  if (s == "cooperative") return Mode::cooperative;
  throw ContractError("unknown training mode '" + s + "'");
}

void adam_step(const std::vector<std::pair<std::string, TensorPtr>>& params,
               const GradientMap& grads, AdamState& state,
               const TrainConfig& cfg) {
  if (state.m1.empty()) {
    state.m1.resize(params.size());
    state.m2.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      state.m1[i].assign(params[i].second->numel(), 0.f);
      state.m2[i].assign(params[i].second->numel(), 0.f);
    }
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& [name, p] = params[i];
    if (!grads.contains(p))
      throw ContractError("adam_step: missing gradient for parameter '" +
                          name + "'");
    const std::vector<float>& g = grads.at(p);
    auto& m1 = state.m1[i];
    auto& m2 = state.m2[i];
    const float b1 = static_cast<float>(cfg.beta1);
    const float b2 = static_cast<float>(cfg.beta2);
    for (size_t j = 0; j < g.size(); ++j) {
      m1[j] = b1 * m1[j] + (1.f - b1) * g[j];
      m2[j] = b2 * m2[j] + (1.f - b2) * g[j] * g[j];
      const double mhat = m1[j] / bc1;
      const double vhat = m2[j] / bc2;
      p->value[j] -= static_cast<float>(cfg.lr * mhat /
                                        (std::sqrt(vhat) + cfg.eps));
    }
  }
}

Sample dihedral_transform(const Sample& s, int h, int w, int k) {
  if (h != w)
    throw ContractError("dihedral_transform: image must be square");
  if (k < 0 || k > 7)
    throw ContractError("dihedral_transform: k must be in [0,8)");
  Sample out = s;
  auto apply = [&](auto& buf) {
    auto t = buf;
    if (k & 4) {  // horizontal mirror
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) t[r * w + (w - 1 - c)] = buf[r * w + c];
      buf = t;
    }
    for (int q = 0; q < (k & 3); ++q) {  // quarter turn
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) t[c * w + (h - 1 - r)] = buf[r * w + c];
      buf = t;
    }
  };
  apply(out.image);
  apply(out.label);
  return out;
}

TrainResult train(const TrainConfig& cfg, const Dataset& train_ds,
                  const std::filesystem::path& out_dir, const Dataset* val,
                  bool resume) {
  namespace fs = std::filesystem;
  using clock = std::chrono::steady_clock;
  fs::create_directories(out_dir);

  const int n = static_cast<int>(train_ds.size());
  if (n == 0) throw ContractError("train: empty dataset");
  const int batch = std::min(cfg.batch_size, n);
  const int batches_per_epoch = n / batch;

  TrainResult result;
  AdamState adam;
  auto state_path = out_dir / "train_state.bin";
  auto last_path = out_dir / "ckpt_last.lsda";
  int start_epoch = 0;
  if (resume) {
    result.bundle = load_checkpoint(last_path);
    auto params = result.bundle.params();
    adam.m1.resize(params.size());
    adam.m2.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      adam.m1[i].assign(params[i].second->numel(), 0.f);
      adam.m2[i].assign(params[i].second->numel(), 0.f);
    }
    start_epoch = load_train_state(state_path, adam);
  } else {
    result.bundle = ModelBundle::init(cfg.arch, cfg.seed);
  }
  ModelBundle& bundle = result.bundle;
  auto params = bundle.params();

  const auto names = component_names(cfg.mode);
  auto log_path = out_dir / "step_log.csv";
  std::ofstream log(log_path, resume ? std::ios::app : std::ios::out);
  if (!log) throw FormatError("train: cannot open " + log_path.string());
  if (!resume) {
    log << "step,epoch,mode";
    for (const auto& c : names) log << ',' << c;
    log << ",wall_ms\n";
  }

  const bool coop = cfg.mode == TrainConfig::Mode::cooperative;
  double best_val = -1.0;
  int step = start_epoch * batches_per_epoch;
  result.steps = step;

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(cfg.seed, mix64(cfg.seed, epoch, 0x5955FF1EULL));
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);

    for (int b = 0; b < batches_per_epoch; ++b) {
      const auto t0 = clock::now();
      std::vector<double> comp_sum(names.size(), 0.0);
      // accumulated batch-mean gradients, params() order
      std::vector<std::vector<float>> accum(params.size());
      for (size_t i = 0; i < params.size(); ++i)
        accum[i].assign(params[i].second->numel(), 0.f);
      const float inv_b = 1.f / static_cast<float>(batch);

      for (int s = 0; s < batch; ++s) {
        const int idx = order[b * batch + s];
        Sample aug;
        const Sample* sp = &train_ds.samples[idx];
        if (cfg.augment) {
          Rng aug_rng(cfg.seed, mix64(cfg.seed, epoch,
                                      0x41750000ULL +
                                          static_cast<uint64_t>(idx)));
          aug = dihedral_transform(*sp, train_ds.height, train_ds.width,
                                   static_cast<int>(aug_rng.uniform_int(8)));
          sp = &aug;
        }
        const Sample& sample = *sp;
        LossGraph g;
        if (coop) {
          Rng he_rng(cfg.seed,
                     mix64(cfg.seed, static_cast<uint64_t>(epoch),
                           static_cast<uint64_t>(idx)));
          auto he = generate_hard_examples(bundle, sample.image, sample.label,
                                           he_rng, cfg.mask);
          g = cooperative_loss_graph(bundle, sample, he, cfg.weights);
        } else {
          g = standard_loss_graph(bundle, sample, cfg.weights);
        }
        for (size_t c = 0; c < names.size(); ++c)
          comp_sum[c] += g.components[c].second->value[0];
        auto gm = backward(g.total);
        for (size_t i = 0; i < params.size(); ++i) {
          const std::vector<float>& pg = gm.at(params[i].second);
          for (size_t j = 0; j < pg.size(); ++j)
            accum[i][j] += inv_b * pg[j];
        }
      }

      bool finite = true;
      double total = 0.0;
      for (auto& c : comp_sum) {
        c /= batch;
        total += c;
        finite = finite && std::isfinite(c);
      }
      if (!finite) {
        result.aborted = true;
        log.flush();
        return result;
      }

      GradientMap batch_grads;
      for (size_t i = 0; i < params.size(); ++i)
        batch_grads.insert(params[i].second.get(), std::move(accum[i]));
      // The schedule is a pure function of the step index, so resumed runs
      // replay identical updates.
      TrainConfig step_cfg = cfg;
      if (cfg.cosine_lr) {
        const double total = static_cast<double>(cfg.epochs) *
                             batches_per_epoch;
        step_cfg.lr = cfg.lr * 0.5 * (1.0 + std::cos(M_PI * step / total));
      }
      adam_step(params, batch_grads, adam, step_cfg);
      ++step;

      const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               clock::now() - t0)
                               .count();
      log << step << ',' << epoch << ',' << TrainConfig::mode_name(cfg.mode);
      for (double c : comp_sum) log << ',' << c;
      log << ',' << wall_ms << '\n';
    }
    result.steps = step;

    const bool cadence =
        (epoch + 1) % cfg.checkpoint_every == 0 || epoch + 1 == cfg.epochs;
    if (cadence) {
      save_checkpoint(bundle, last_path);
      save_train_state(state_path, epoch + 1, adam);
      if (val) {
        auto rep = evaluate(bundle, {*val}, EvalStage::ftn_stn);
        const double fg = rep.domains[0].mean_foreground_dice;
        if (fg > best_val) {
          best_val = fg;
          result.best_val_checkpoint = out_dir / "ckpt_best_val.lsda";
          save_checkpoint(bundle, result.best_val_checkpoint);
        }
      }
    }
  }

  result.final_checkpoint = out_dir / "ckpt_final.lsda";
  save_checkpoint(bundle, result.final_checkpoint);
  log.flush();
  return result;
}

}  // namespace lsda
