// Command-line front end: dataset generation, training, evaluation and
// mask inspection for the cooperative FTN/STN segmentation framework.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lsda/checkpoint.hpp"
#include "lsda/report_io.hpp"
#include "lsda/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumeric = 3;
constexpr const char* kArtifactVersion = "1.0.0";

void write_manifest(const fs::path& dir, const std::string& command,
                    const json& config) {
  json m;
  m["artifact_version"] = kArtifactVersion;
  m["command"] = command;
  m["config"] = config;
  fs::create_directories(dir);
  std::ofstream os(dir / "manifest.json");
  if (!os)
    throw lsda::FormatError("cannot write manifest in " + dir.string());
  os << m.dump(2) << '\n';
}

lsda::Dataset load_dataset_dir(const fs::path& dir) {
  const fs::path file = fs::is_directory(dir) ? dir / "dataset.lsds" : dir;
  return lsda::read_dataset(file);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    const size_t next = s.find(',', pos);
    out.push_back(s.substr(pos, next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

int run_gen_data(const std::string& out_dir, int n, uint64_t seed,
                 const std::string& corrupt_kind, float severity, bool shifted,
                 const std::string& split) {
  lsda::DatasetSpec spec;
  spec.count = n;
  spec.seed = seed;
  spec.phantom.shifted = shifted;
  spec.split_tag = split;
  spec.corruption = corrupt_kind.empty() ? "none" : corrupt_kind;
  spec.severity = severity;
  auto ds = lsda::gen_dataset(spec);
  fs::create_directories(out_dir);
  lsda::write_dataset(ds, fs::path(out_dir) / "dataset.lsds");
  write_manifest(out_dir, "gen-data",
                 json{{"n", n},
                      {"seed", seed},
                      {"corrupt", spec.corruption},
                      {"severity", severity},
                      {"shifted", shifted},
                      {"split", split}});
  return kExitOk;
}

int run_train(const std::string& mode, const std::string& data_dir,
              const std::string& out_dir, uint64_t seed, int epochs, int batch,
              double lr, const std::string& val_dir, bool resume,
              bool abs_gradient, bool augment, double hard_weight, bool cosine_lr) {
  lsda::TrainConfig cfg;
  cfg.mode = lsda::TrainConfig::mode_from_name(mode);
  cfg.seed = seed;
  cfg.epochs = epochs;
  cfg.batch_size = batch;
  cfg.lr = lr;
  cfg.mask.use_abs_gradient = abs_gradient;
  cfg.augment = augment;
  cfg.weights.hard = static_cast<float>(hard_weight);
  cfg.cosine_lr = cosine_lr;
  auto train_ds = load_dataset_dir(data_dir);
  std::optional<lsda::Dataset> val;
  if (!val_dir.empty()) val = load_dataset_dir(val_dir);

  write_manifest(out_dir, "train",
                 json{{"mode", mode},
                      {"data", data_dir},
                      {"val", val_dir},
                      {"seed", seed},
                      {"epochs", epochs},
                      {"batch", batch},
                      {"augment", augment},
                      {"hard_weight", hard_weight},
                      {"cosine_lr", cosine_lr},
                      {"lr", lr},
                      {"abs_gradient", abs_gradient},
                      {"arch", json::parse(cfg.arch.to_json())}});
  auto result =
      lsda::train(cfg, train_ds, out_dir, val ? &*val : nullptr, resume);
  if (result.aborted) {
    std::cerr << "train: non-finite loss, aborted; last checkpoint kept\n";
    return kExitNumeric;
  }
  std::cout << "trained " << result.steps << " steps -> "
            << result.final_checkpoint.string() << '\n';
  return kExitOk;
}

int run_eval(const std::string& model, const std::string& data_list,
             const std::string& stage, const std::string& report,
             const std::string& plot) {
  auto bundle = lsda::load_checkpoint(model);
  std::vector<lsda::Dataset> datasets;
  for (const auto& dir : split_commas(data_list))
    datasets.push_back(load_dataset_dir(dir));
  auto rep =
      lsda::evaluate(bundle, datasets, lsda::eval_stage_from_name(stage));
  lsda::write_report_csv(rep, report);
  if (!plot.empty()) lsda::write_boxplot_svg(rep, plot);
  write_manifest(fs::path(report).parent_path().empty()
                     ? fs::path(".")
                     : fs::path(report).parent_path(),
                 "eval",
                 json{{"model", model},
                      {"data", data_list},
                      {"stage", stage},
                      {"report", report},
                      {"plot", plot}});
  return kExitOk;
}

int run_mask_demo(const std::string& model, const std::string& data_dir,
                  const std::string& scheme, float p_ratio, float a,
                  int index, uint64_t seed, const std::string& out_dir) {
  auto bundle = lsda::load_checkpoint(model);
  auto ds = load_dataset_dir(data_dir);
  if (index < 0 || index >= static_cast<int>(ds.size()))
    throw lsda::ContractError("mask-demo: sample index out of range");
  const auto& sample = ds.samples[index];
  const auto& cfg = bundle.config;
  const int c = cfg.latent_channels, lh = cfg.latent_h(), lw = cfg.latent_w();

  auto x = lsda::make_tensor({1, cfg.image_h, cfg.image_w}, sample.image);
  auto z_i = lsda::encode(bundle, x);
  auto z_s = lsda::decouple(bundle, z_i);

  const auto sch = lsda::mask_scheme_from_name(scheme);
  lsda::Rng rng(seed, 0xdecafULL);
  auto build_mask = [&](const lsda::TensorPtr& z, bool shape_code) {
    if (sch == lsda::MaskScheme::dropout)
      return lsda::mask_dropout(c, lh, lw, p_ratio, rng);
    auto g = shape_code
                 ? lsda::grad_latent_seg(bundle, z->value, sample.label)
                 : lsda::grad_latent_rec(bundle, z->value, sample.image);
    return sch == lsda::MaskScheme::channel_targeted
               ? lsda::mask_channel_targeted(g, c, lh, lw, p_ratio, a)
               : lsda::mask_spatial_targeted(g, c, lh, lw, p_ratio, a);
  };
  auto m_i = build_mask(z_i, false);
  auto m_s = build_mask(z_s, true);

  auto zi_hat = lsda::make_tensor(z_i->shape, z_i->value);
  auto zs_hat = lsda::make_tensor(z_s->shape, z_s->value);
  for (size_t i = 0; i < zi_hat->value.size(); ++i) {
    zi_hat->value[i] *= m_i.m[i];
    zs_hat->value[i] *= m_s.m[i];
  }
  auto x_hat = lsda::decode_image(bundle, zi_hat);
  auto p_hat = lsda::decode_seg(bundle, zs_hat);

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  lsda::write_csv_array(m_i.m, c, lh, lw, out / "mask_zi.csv");
  lsda::write_csv_array(m_s.m, c, lh, lw, out / "mask_zs.csv");
  lsda::write_csv_array(zi_hat->value, c, lh, lw, out / "zhat_zi.csv");
  lsda::write_csv_array(zs_hat->value, c, lh, lw, out / "zhat_zs.csv");
  lsda::write_pgm(sample.image, cfg.image_h, cfg.image_w, out / "x.pgm");
  lsda::write_pgm(x_hat->value, cfg.image_h, cfg.image_w, out / "xhat.pgm");
  lsda::write_csv_array(p_hat->value, cfg.num_classes, cfg.image_h,
                        cfg.image_w, out / "phat.csv");
  auto labels = lsda::argmax_channels(*p_hat);
  std::vector<float> lab_img(labels.size());
  for (size_t i = 0; i < labels.size(); ++i)
    lab_img[i] = labels[i] / float(cfg.num_classes - 1);
  lsda::write_pgm(lab_img, cfg.image_h, cfg.image_w, out / "phat_argmax.pgm");
  write_manifest(out_dir, "mask-demo",
                 json{{"model", model},
                      {"data", data_dir},
                      {"scheme", scheme},
                      {"p", p_ratio},
                      {"a", a},
                      {"index", index},
                      {"seed", seed}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative FTN/STN segmentation with latent-space "
               "data augmentation"};
  app.require_subcommand(1);
  app.set_config("--config");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a phantom dataset");
  std::string g_out, g_corrupt, g_split = "train";
  int g_n = 10;
  uint64_t g_seed = 0;
  float g_severity = 0.5f;
  bool g_shifted = false;
  gen->add_option("--out", g_out)->required();
  gen->add_option("--n", g_n)->required();
  gen->add_option("--seed", g_seed)->required();
  gen->add_option("--corrupt", g_corrupt)
      ->check(CLI::IsMember({"bias", "ghost", "motion", "spike"}));
  gen->add_option("--severity", g_severity)->check(CLI::Range(0.f, 1.f));
  gen->add_flag("--shifted", g_shifted);
  gen->add_option("--split", g_split);

  // train
  auto* tr = app.add_subcommand("train", "train a model");
  std::string t_mode, t_data, t_out, t_val;
  uint64_t t_seed = 0;
  int t_epochs = 200, t_batch = 20;
  double t_lr = 1e-4;
  bool t_resume = false, t_abs = false, t_augment = false;
  double t_hard = 1.0;
  bool t_cosine = false;
  tr->add_option("--mode", t_mode)
      ->required()
      ->check(CLI::IsMember({"standard", "cooperative"}));
  tr->add_option("--data", t_data)->required();
  tr->add_option("--out", t_out)->required();
  tr->add_option("--seed", t_seed)->required();
  tr->add_option("--epochs", t_epochs);
  tr->add_option("--batch", t_batch);
  tr->add_option("--lr", t_lr);
  tr->add_option("--val", t_val);
  tr->add_flag("--resume", t_resume);
  tr->add_flag("--abs-gradient", t_abs);
  tr->add_flag("--augment", t_augment);
  tr->add_option("--hard-weight", t_hard);
  tr->add_flag("--cosine-lr", t_cosine);

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string e_model, e_data, e_stage = "ftn+stn", e_report, e_plot;
  ev->add_option("--model", e_model)->required();
  ev->add_option("--data", e_data)->required();
  ev->add_option("--stage", e_stage)
      ->check(CLI::IsMember({"ftn", "ftn+stn"}));
  ev->add_option("--report", e_report)->required();
  ev->add_option("--plot", e_plot);

  // mask-demo
  auto* md = app.add_subcommand("mask-demo", "dump masks and hard examples");
  std::string m_model, m_data, m_scheme, m_out;
  float m_p = 0.3f, m_a = 0.25f;
  int m_index = 0;
  uint64_t m_seed = 0;
  md->add_option("--model", m_model)->required();
  md->add_option("--data", m_data)->required();
  md->add_option("--scheme", m_scheme)
      ->required()
      ->check(CLI::IsMember({"dropout", "channel", "spatial"}));
  md->add_option("--p", m_p)->check(CLI::Range(0.f, 1.f));
  md->add_option("--a", m_a)->check(CLI::Range(0.f, 0.5f));
  md->add_option("--index", m_index);
  md->add_option("--seed", m_seed);
  md->add_option("--out", m_out)->required();

  try {
    app.parse(argc, argv);
    if (gen->parsed())
      return run_gen_data(g_out, g_n, g_seed, g_corrupt, g_severity,
                          g_shifted, g_split);
    if (tr->parsed())
      return run_train(t_mode, t_data, t_out, t_seed, t_epochs, t_batch, t_lr,
                       t_val, t_resume, t_abs, t_augment, t_hard, t_cosine);
    if (ev->parsed())
      return run_eval(e_model, e_data, e_stage, e_report, e_plot);
    if (md->parsed())
      return run_mask_demo(m_model, m_data, m_scheme, m_p, m_a, m_index,
                           m_seed, m_out);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  } catch (const lsda::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const lsda::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
