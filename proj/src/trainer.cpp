#include "projgan/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

#include "projgan/dataset.hpp"
#include "projgan/digest.hpp"
#include "projgan/error.hpp"
#include "projgan/json_util.hpp"
#include "projgan/losses.hpp"
#include "projgan/metrics.hpp"

namespace projgan {
namespace fs = std::filesystem;
using nlohmann::json;

void to_json(json& j, const EpochRecord& r) {
  j = json{{"epoch", r.epoch},
           {"losses", r.losses},
           {"validation", std::isfinite(r.validation) ? json(stable_number(r.validation)) : json(nullptr)},
           {"wall_clock_s", stable_number(r.wall_clock_s)},
           {"seed_digest", r.seed_digest},
           {"config_hash", r.config_hash},
           {"warnings", r.warnings}};
}

void from_json(const json& j, EpochRecord& r) {
  j.at("epoch").get_to(r.epoch);
  r.losses = j.at("losses");
  r.validation = j.at("validation").is_null() ? NAN : j.at("validation").get<double>();
  j.at("wall_clock_s").get_to(r.wall_clock_s);
  j.at("seed_digest").get_to(r.seed_digest);
  j.at("config_hash").get_to(r.config_hash);
  r.warnings = j.value("warnings", std::vector<std::string>{});
}

std::vector<EpochRecord> read_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<EpochRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line).get<EpochRecord>());
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Format, path.string() + ": " + e.what());
    }
  }
  return out;
}

LossWeights ablation_weights(const std::string& variant, const LossWeights& full) {
  LossWeights w = full;
  if (variant == "baseline") {
    w.alpha = 0.0;
    w.beta = 0.0;
  } else if (variant == "vpg") {
    w.beta = 0.0;
  } else if (variant == "hcg") {
    w.alpha = 0.0;
  } else if (variant != "full") {
    throw Error(ErrorKind::Config, "unknown ablation variant '" + variant + "'");
  }
  return w;
}

namespace {

using Clock = std::chrono::steady_clock;

void configure_torch() {
  static const bool once = [] {
    at::globalContext().setDeterministicAlgorithms(true, false);
    return true;
  }();
  (void)once;
}

std::unique_ptr<torch::optim::Optimizer> make_optimizer(std::vector<torch::Tensor> params,
                                                        const OptimizerSettings& s) {
  if (s.name == "rmsprop") {
    return std::make_unique<torch::optim::RMSprop>(
        std::move(params), torch::optim::RMSpropOptions(s.lr).alpha(s.rms_alpha).eps(s.eps));
  }
  return std::make_unique<torch::optim::Adam>(
      std::move(params), torch::optim::AdamOptions(s.lr).betas({s.beta1, s.beta2}).eps(s.eps));
}

void check_finite(const torch::Tensor& loss, const std::string& what, int epoch, size_t step) {
  if (!torch::isfinite(loss).all().item<bool>()) {
    throw Error(ErrorKind::Numeric, "non-finite " + what + " at epoch " + std::to_string(epoch) + ", step " +
                                        std::to_string(step));
  }
}

// Per-stage bookkeeping: resumable state, the jsonl log and best-checkpoint
// tracking. Epoch-level randomness is re-derived from (stage seed, epoch), so
// a resumed run replays exactly what an uninterrupted run would do.
class StageRun {
 public:
  StageRun(const ExperimentConfig& config, std::string stage, bool minimize, const TrainOptions& options)
      : config_(config),
        stage_(std::move(stage)),
        minimize_(minimize),
        options_(options),
        hash_(config_hash(config)),
        seed_(derive_seed(config.seed, stage_)) {
    fs::create_directories(run_dir() / "checkpoints");
    fs::create_directories(run_dir() / "logs");
    write_json_file(json{{"config", json(config)}, {"config_hash", hash_}}, run_dir() / "run_manifest.json");
  }

  fs::path run_dir() const { return config_.run_dir(); }
  fs::path log_path() const { return run_dir() / "logs" / (stage_ + "_log.jsonl"); }
  fs::path last_dir() const { return run_dir() / "checkpoints" / (stage_ + "_last"); }
  const std::string& hash() const { return hash_; }
  uint64_t seed() const { return seed_; }
  uint64_t init_seed(const std::string& net) const { return derive_seed(config_.seed, stage_ + "/init/" + net); }

  // Returns the first epoch to run, restoring networks and optimizers when resuming.
  int begin(const std::vector<std::pair<std::string, std::shared_ptr<torch::nn::Module>>>& nets,
            const std::vector<std::pair<std::string, torch::optim::Optimizer*>>& optimizers) {
    int start = 1;
    if (options_.resume && fs::exists(last_dir() / "state.json")) {
      const json state = read_json_file(last_dir() / "state.json");
      if (state.at("config_hash") != hash_) {
        throw Error(ErrorKind::Config, "cannot resume " + stage_ + ": config hash differs from the saved state");
      }
      for (const auto& [name, net] : nets) {
        torch::serialize::InputArchive a;
        a.load_from((last_dir() / (name + ".pt")).string());
        net->load(a);
      }
      for (const auto& [name, opt] : optimizers) {
        torch::serialize::InputArchive a;
        a.load_from((last_dir() / (name + ".opt.pt")).string());
        opt->load(a);
      }
      const int done = state.at("epoch").get<int>();
      best_epoch_ = state.at("best_epoch").get<int>();
      best_value_ = state.at("best_value").is_null() ? NAN : state.at("best_value").get<double>();
      for (auto& r : read_log(log_path())) {
        if (r.epoch <= done) log_.push_back(std::move(r));
      }
      start = done + 1;
    }
    std::ofstream out(log_path(), std::ios::trunc);
    for (const auto& r : log_) out << json(r).dump() << "\n";
    return start;
  }

  std::mt19937_64 epoch_rng(int epoch) const { return std::mt19937_64(derive_seed(seed_, "epoch", epoch)); }
  std::string seed_digest(int epoch) const {
    return sha256_hex(std::to_string(derive_seed(seed_, "epoch", epoch))).substr(0, 16);
  }

  bool improves(double value) const {
    if (!std::isfinite(value)) return false;
    if (best_epoch_ == 0) return true;
    return minimize_ ? value < best_value_ : value > best_value_;
  }

  void mark_best(int epoch, double value) {
    best_epoch_ = epoch;
    best_value_ = value;
  }

  // False once the run should stop early.
  bool finish_epoch(EpochRecord record,
                    const std::vector<std::pair<std::string, std::shared_ptr<torch::nn::Module>>>& nets,
                    const std::vector<std::pair<std::string, torch::optim::Optimizer*>>& optimizers) {
    fs::create_directories(last_dir());
    for (const auto& [name, net] : nets) {
      torch::serialize::OutputArchive a;
      net->save(a);
      a.save_to((last_dir() / (name + ".pt")).string());
    }
    for (const auto& [name, opt] : optimizers) {
      torch::serialize::OutputArchive a;
      opt->save(a);
      a.save_to((last_dir() / (name + ".opt.pt")).string());
    }
    write_json_file(json{{"epoch", record.epoch},
                         {"best_epoch", best_epoch_},
                         {"best_value", std::isfinite(best_value_) ? json(best_value_) : json(nullptr)},
                         {"config_hash", hash_}},
                    last_dir() / "state.json");
    std::ofstream out(log_path(), std::ios::app);
    out << json(record).dump() << "\n";
    if (!options_.quiet) {
      std::fprintf(stderr, "[%s] epoch %d %s validation=%.6f (%.1fs)\n", stage_.c_str(), record.epoch,
                   record.losses.dump().c_str(), record.validation, record.wall_clock_s);
    }
    const int epoch = record.epoch;
    log_.push_back(std::move(record));
    return options_.stop_after_epoch == 0 || epoch < options_.stop_after_epoch;
  }

  StageResult result(const fs::path& best_dir) const {
    StageResult r;
    r.best_checkpoint = best_dir;
    r.best_epoch = best_epoch_;
    r.best_validation = best_value_;
    r.log = log_;
    return r;
  }

 private:
  const ExperimentConfig& config_;
  std::string stage_;
  bool minimize_;
  TrainOptions options_;
  std::string hash_;
  uint64_t seed_;
  int best_epoch_ = 0;
  double best_value_ = NAN;
  std::vector<EpochRecord> log_;
};

std::vector<size_t> shuffled(size_t n, std::mt19937_64& rng) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  for (size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  return order;
}

std::vector<std::vector<size_t>> batches(const std::vector<size_t>& order, int batch_size) {
  std::vector<std::vector<size_t>> out;
  for (size_t i = 0; i < order.size(); i += static_cast<size_t>(batch_size)) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size)));
  }
  return out;
}

torch::Tensor stack_rows(const std::vector<torch::Tensor>& items, const std::vector<size_t>& idx) {
  std::vector<torch::Tensor> rows;
  rows.reserve(idx.size());
  for (size_t i : idx) rows.push_back(items[i]);
  return torch::cat(rows, 0);
}

// Flips dims 2 and 3 ([N, C, L, W, ...]) with probability 1/2 each.
std::vector<int64_t> draw_flips(std::mt19937_64& rng) {
  std::vector<int64_t> dims;
  std::bernoulli_distribution coin(0.5);
  if (coin(rng)) dims.push_back(2);
  if (coin(rng)) dims.push_back(3);
  return dims;
}

torch::Tensor maybe_flip(const torch::Tensor& t, const std::vector<int64_t>& dims) {
  return dims.empty() ? t : t.flip(dims);
}

double dice(const torch::Tensor& logits, const torch::Tensor& target) {
  const torch::Tensor pred = (logits > 0).to(torch::kFloat32);
  const double inter = (pred * target).sum().item<double>();
  const double total = pred.sum().item<double>() + target.sum().item<double>();
  return total > 0.0 ? 2.0 * inter / total : 1.0;
}

struct MapPairs {
  std::vector<torch::Tensor> oct_maps;
  std::vector<torch::Tensor> octa_maps;
  std::vector<torch::Tensor> masks;
};

MapPairs project_split(const std::vector<DatasetSample>& samples) {
  MapPairs p;
  for (const auto& s : samples) {
    p.oct_maps.push_back(to_tensor(project_mean(s.oct)));
    p.octa_maps.push_back(to_tensor(project_mean(s.octa)));
    p.masks.push_back(to_tensor(s.mask));
  }
  return p;
}

std::vector<DatasetSample> require_split(const ExperimentConfig& config, const char* split) {
  if (!fs::exists(config.dataset)) throw Error(ErrorKind::Io, "dataset " + config.dataset.string() + " does not exist");
  auto samples = load_split(config.dataset, split);
  if (samples.empty()) throw Error(ErrorKind::EmptySet, std::string("dataset split '") + split + "' is empty");
  return samples;
}

double target_mean(const std::vector<torch::Tensor>& targets) {
  double sum = 0.0;
  int64_t count = 0;
  for (const auto& t : targets) {
    sum += t.sum().item<double>();
    count += t.numel();
  }
  return std::clamp(sum / static_cast<double>(count), 1e-3, 1.0 - 1e-3);
}

json losses_json(const std::vector<std::pair<std::string, double>>& sums, size_t steps) {
  json j = json::object();
  for (const auto& [k, v] : sums) j[k] = stable_number(v / static_cast<double>(steps));
  return j;
}

}  // namespace

StageResult pretrain_vseg(const ExperimentConfig& config, const TrainOptions& options) {
  configure_torch();
  config.validate();
  const auto train = require_split(config, "train");
  const auto val = require_split(config, "val");
  const MapPairs tr = project_split(train);
  const MapPairs va = project_split(val);

  const VsegStage& st = config.vseg;
  const int64_t L = train.front().oct.shape().L;
  const int64_t W = train.front().oct.shape().W;
  const int64_t crop = st.crop > 0 ? std::min<int64_t>({st.crop, L, W}) : 0;
  if (crop > 0) check_divisible({crop, crop}, st.model.n_downsamples, "vseg crop");
  check_divisible({L, W}, st.model.n_downsamples, "vseg input");

  std::vector<std::string> warnings;
  const bool degenerate = std::all_of(tr.masks.begin(), tr.masks.end(),
                                      [](const torch::Tensor& m) { return m.sum().item<double>() == 0.0; });
  if (degenerate) {
    warnings.emplace_back("degenerate labels: every training mask is empty");
    std::fprintf(stderr, "warning: %s\n", warnings.back().c_str());
  }

  StageRun run(config, "vseg", /*minimize=*/false, options);
  UNet net = build_segmenter(st.model, run.init_seed("vseg"));
  auto opt = make_optimizer(net->parameters(), st.optimizer);
  const std::vector<std::pair<std::string, std::shared_ptr<torch::nn::Module>>> nets{{"vseg", net.ptr()}};
  const std::vector<std::pair<std::string, torch::optim::Optimizer*>> opts{{"vseg", opt.get()}};
  const fs::path best_dir = run.run_dir() / "checkpoints" / "vseg_best";

  for (int epoch = run.begin(nets, opts); epoch <= st.epochs; ++epoch) {
    const auto t0 = Clock::now();
    auto rng = run.epoch_rng(epoch);
    net->train();
    double bce_sum = 0.0;
    size_t steps = 0;
    for (const auto& batch : batches(shuffled(train.size(), rng), st.batch_size)) {
      std::vector<torch::Tensor> xs, ys;
      for (size_t i : batch) {
        torch::Tensor x = tr.octa_maps[i];
        torch::Tensor y = tr.masks[i];
        if (crop > 0) {
          std::uniform_int_distribution<int64_t> pl(0, L - crop), pw(0, W - crop);
          const int64_t l0 = pl(rng), w0 = pw(rng);
          x = x.slice(2, l0, l0 + crop).slice(3, w0, w0 + crop);
          y = y.slice(2, l0, l0 + crop).slice(3, w0, w0 + crop);
        }
        if (st.flip) {
          const auto dims = draw_flips(rng);
          x = maybe_flip(x, dims);
          y = maybe_flip(y, dims);
        }
        xs.push_back(x);
        ys.push_back(y);
      }
      opt->zero_grad();
      const torch::Tensor logits = net->forward(torch::cat(xs, 0));
      const torch::Tensor loss = torch::binary_cross_entropy_with_logits(logits, torch::cat(ys, 0));
      check_finite(loss, "vseg cross-entropy", epoch, steps);
      loss.backward();
      opt->step();
      bce_sum += loss.item<double>();
      ++steps;
    }

    net->eval();
    double val_bce = 0.0, val_dice = 0.0;
    {
      torch::NoGradGuard no_grad;
      for (size_t i = 0; i < val.size(); ++i) {
        const torch::Tensor logits = net->forward(va.octa_maps[i]);
        val_bce += torch::binary_cross_entropy_with_logits(logits, va.masks[i]).item<double>();
        val_dice += dice(logits, va.masks[i]);
      }
    }
    val_bce /= static_cast<double>(val.size());
    val_dice /= static_cast<double>(val.size());

    if (run.improves(val_dice)) {
      run.mark_best(epoch, val_dice);
      CheckpointInfo info;
      info.role = "vseg";
      info.spec = st.model;
      info.init_seed = run.init_seed("vseg");
      info.epoch = epoch;
      info.selection_metric = "val_dice";
      info.selection_value = val_dice;
      info.config_hash = run.hash();
      save_checkpoint(net.ptr(), info, best_dir);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.losses = losses_json({{"train_bce", bce_sum}}, steps);
    rec.losses["val_bce"] = stable_number(val_bce);
    rec.validation = val_dice;
    rec.wall_clock_s = std::chrono::duration<double>(Clock::now() - t0).count();
    rec.seed_digest = run.seed_digest(epoch);
    rec.config_hash = run.hash();
    rec.warnings = warnings;
    if (!run.finish_epoch(std::move(rec), nets, opts)) break;
  }
  return run.result(best_dir);
}

StageResult pretrain_hcg(const ExperimentConfig& config, const TrainOptions& options) {
  configure_torch();
  config.validate();
  const auto train = require_split(config, "train");
  const auto val = require_split(config, "val");
  const MapPairs tr = project_split(train);
  const MapPairs va = project_split(val);
  const HcgStage& st = config.hcg;
  GeneratorSpec gspec = st.generator;
  gspec.squash_output = true;

  StageRun run(config, "gpre", /*minimize=*/true, options);
  UNet gen = build_generator(gspec, run.init_seed("gpre"));
  if (st.output_prior_from_data) gen->set_output_prior(target_mean(tr.octa_maps));
  PatchDiscriminator disc = build_discriminator(st.discriminator, run.init_seed("d2d"));
  auto g_opt = make_optimizer(gen->parameters(), st.optimizer);
  auto d_opt = make_optimizer(disc->parameters(), st.optimizer);
  const std::vector<std::pair<std::string, std::shared_ptr<torch::nn::Module>>> nets{{"gpre", gen.ptr()},
                                                                                    {"d2d", disc.ptr()}};
  const std::vector<std::pair<std::string, torch::optim::Optimizer*>> opts{{"gpre", g_opt.get()},
                                                                           {"d2d", d_opt.get()}};
  const fs::path best_dir = run.run_dir() / "checkpoints" / "gpre_best";
  const bool conditional = st.discriminator.conditional;
  auto score = [&](const torch::Tensor& src, const torch::Tensor& img) {
    return disc->forward(conditional ? torch::cat({src, img}, 1) : img);
  };

  for (int epoch = run.begin(nets, opts); epoch <= st.epochs; ++epoch) {
    const auto t0 = Clock::now();
    auto rng = run.epoch_rng(epoch);
    gen->train();
    disc->train();
    double adv_sum = 0.0, l1_sum = 0.0, d_sum = 0.0;
    size_t steps = 0;
    for (const auto& batch : batches(shuffled(train.size(), rng), st.batch_size)) {
      std::vector<torch::Tensor> xs, ys;
      for (size_t i : batch) {
        const auto dims = st.flip ? draw_flips(rng) : std::vector<int64_t>{};
        xs.push_back(maybe_flip(tr.oct_maps[i], dims));
        ys.push_back(maybe_flip(tr.octa_maps[i], dims));
      }
      const torch::Tensor x = torch::cat(xs, 0);
      const torch::Tensor y = torch::cat(ys, 0);
      const torch::Tensor fake = gen->forward(x);

      set_trainable(*disc, true);
      d_opt->zero_grad();
      const torch::Tensor d_loss = discriminator_step_loss(score(x, y), score(x, fake.detach()));
      check_finite(d_loss, "hcg discriminator loss", epoch, steps);
      d_loss.backward();
      d_opt->step();

      set_trainable(*disc, false);
      g_opt->zero_grad();
      const torch::Tensor adv = generator_adv_loss(score(x, fake));
      const torch::Tensor l1 = l1_mean(fake, y);
      const torch::Tensor g_loss = adv + st.lambda_l1 * l1;
      check_finite(g_loss, "hcg generator loss", epoch, steps);
      g_loss.backward();
      g_opt->step();
      set_trainable(*disc, true);

      adv_sum += adv.item<double>();
      l1_sum += l1.item<double>();
      d_sum += d_loss.item<double>();
      ++steps;
    }

    gen->eval();
    double val_mae = 0.0;
    {
      torch::NoGradGuard no_grad;
      for (size_t i = 0; i < val.size(); ++i) {
        val_mae += l1_mean(gen->forward(va.oct_maps[i]), va.octa_maps[i]).item<double>();
      }
    }
    val_mae /= static_cast<double>(val.size());

    if (run.improves(val_mae)) {
      run.mark_best(epoch, val_mae);
      CheckpointInfo info;
      info.role = "gpre";
      info.spec = gspec;
      info.init_seed = run.init_seed("gpre");
      info.epoch = epoch;
      info.selection_metric = "val_mae";
      info.selection_value = val_mae;
      info.config_hash = run.hash();
      save_checkpoint(gen.ptr(), info, best_dir);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.losses = losses_json({{"g_adv", adv_sum}, {"g_l1", l1_sum}, {"d", d_sum}}, steps);
    rec.validation = val_mae;
    rec.wall_clock_s = std::chrono::duration<double>(Clock::now() - t0).count();
    rec.seed_digest = run.seed_digest(epoch);
    rec.config_hash = run.hash();
    if (!run.finish_epoch(std::move(rec), nets, opts)) break;
  }
  return run.result(best_dir);
}

StageResult train_transpro(const ExperimentConfig& config, const fs::path& vseg_checkpoint,
                           const fs::path& gpre_checkpoint, const TrainOptions& options) {
  configure_torch();
  config.validate();
  const auto train = require_split(config, "train");
  const auto val = require_split(config, "val");
  const TransproStage& st = config.transpro;
  const LossWeights& w = config.weights;

  const FrozenNetwork vseg = load_frozen(vseg_checkpoint, "vseg");
  const FrozenNetwork gpre = load_frozen(gpre_checkpoint, "gpre");
  const Shape3 shape = train.front().oct.shape();
  try {
    check_divisible({shape.L, shape.W}, vseg.net()->spec().n_downsamples, "vseg");
    check_divisible({shape.L, shape.W}, gpre.net()->spec().n_downsamples, "gpre");
  } catch (const Error& e) {
    throw Error(ErrorKind::Shape, std::string("guidance checkpoint incompatible with dataset: ") + e.what());
  }
  const std::string vseg_before = vseg.digest();
  const std::string gpre_before = gpre.digest();

  std::vector<torch::Tensor> xs, ys, y_prime, l_seg;
  {
    torch::NoGradGuard no_grad;
    for (const auto& s : train) {
      if (!(s.oct.shape() == shape)) throw Error(ErrorKind::Shape, "training volumes differ in shape");
      xs.push_back(to_tensor(s.oct));
      ys.push_back(to_tensor(s.octa));
      // Both guidance targets are fixed functions of the sample.
      y_prime.push_back(gpre.forward(project_depth(xs.back())));
      l_seg.push_back(vseg.forward(project_depth(ys.back())));
    }
  }

  StageRun run(config, "train", /*minimize=*/true, options);
  UNet gen = build_generator(st.generator, run.init_seed("g3d"));
  if (st.output_prior_from_data && st.generator.squash_output) gen->set_output_prior(target_mean(ys));
  PatchDiscriminator d3 = build_discriminator(st.d3d, run.init_seed("d3d"));
  PatchDiscriminator d2 = build_discriminator(st.d2d, run.init_seed("d2d"));
  auto g_opt = make_optimizer(gen->parameters(), st.generator_optimizer);
  auto d3_opt = make_optimizer(d3->parameters(), st.discriminator_optimizer);
  auto d2_opt = make_optimizer(d2->parameters(), st.discriminator_optimizer);
  const std::vector<std::pair<std::string, std::shared_ptr<torch::nn::Module>>> nets{
      {"g3d", gen.ptr()}, {"d3d", d3.ptr()}, {"d2d", d2.ptr()}};
  const std::vector<std::pair<std::string, torch::optim::Optimizer*>> opts{
      {"g3d", g_opt.get()}, {"d3d", d3_opt.get()}, {"d2d", d2_opt.get()}};
  const fs::path best_dir = run.run_dir() / "checkpoints" / "g3d_best";

  for (int epoch = run.begin(nets, opts); epoch <= st.epochs; ++epoch) {
    const auto t0 = Clock::now();
    auto rng = run.epoch_rng(epoch);
    gen->train();
    d3->train();
    d2->train();
    std::vector<std::pair<std::string, double>> sums{{"adv3d", 0.0}, {"adv2d", 0.0}, {"l1_3d", 0.0},
                                                     {"l1_2d", 0.0}, {"vpg", 0.0},   {"hcg", 0.0},
                                                     {"total", 0.0}, {"d3d", 0.0},   {"d2d", 0.0}};
    size_t steps = 0;
    for (const auto& batch : batches(shuffled(train.size(), rng), st.batch_size)) {
      const torch::Tensor x = stack_rows(xs, batch);
      const torch::Tensor y = stack_rows(ys, batch);
      const torch::Tensor y_proj = project_depth(y);
      const torch::Tensor fake = gen->forward(x);
      const torch::Tensor fake_proj = project_depth(fake);

      set_trainable(*d3, true);
      set_trainable(*d2, true);
      d3_opt->zero_grad();
      const torch::Tensor d3_loss = discriminator_step_loss(d3->forward(y), d3->forward(fake.detach()));
      check_finite(d3_loss, "3D discriminator loss", epoch, steps);
      d3_loss.backward();
      d3_opt->step();

      d2_opt->zero_grad();
      const torch::Tensor d2_loss = discriminator_step_loss(d2->forward(y_proj), d2->forward(fake_proj.detach()));
      check_finite(d2_loss, "2D discriminator loss", epoch, steps);
      d2_loss.backward();
      d2_opt->step();

      set_trainable(*d3, false);
      set_trainable(*d2, false);
      g_opt->zero_grad();
      GeneratorLossTerms<torch::Tensor> t;
      t.adv3d = generator_adv_loss(d3->forward(fake));
      t.adv2d = generator_adv_loss(d2->forward(fake_proj));
      t.l1_3d = loss_l1_3d(y, fake);
      t.l1_2d = l1_mean(y_proj, fake_proj);
      t.vpg = w.alpha > 0.0
                  ? loss_vpg(vseg.forward(fake_proj), stack_rows(l_seg, batch), st.vpg_on_probabilities)
                  : torch::zeros({}, fake.options());
      t.hcg = w.beta > 0.0 ? l1_mean(stack_rows(y_prime, batch), fake_proj) : torch::zeros({}, fake.options());
      const torch::Tensor total = total_generator_loss(t, w);
      check_finite(total, "generator loss", epoch, steps);
      total.backward();
      g_opt->step();

      const double values[] = {t.adv3d.item<double>(), t.adv2d.item<double>(), t.l1_3d.item<double>(),
                               t.l1_2d.item<double>(), t.vpg.item<double>(),   t.hcg.item<double>(),
                               total.item<double>(),   d3_loss.item<double>(), d2_loss.item<double>()};
      for (size_t k = 0; k < sums.size(); ++k) sums[k].second += values[k];
      ++steps;
    }
    set_trainable(*d3, true);
    set_trainable(*d2, true);

    double val_mae = NAN;
    if (epoch % st.validation_every == 0 || epoch == st.epochs) {
      gen->eval();
      torch::NoGradGuard no_grad;
      double sum = 0.0;
      for (const auto& s : val) sum += mae_volume(s.octa, to_volume(gen->forward(to_tensor(s.oct))));
      val_mae = sum / static_cast<double>(val.size());
    }

    if (run.improves(val_mae)) {
      run.mark_best(epoch, val_mae);
      CheckpointInfo info;
      info.role = "g3d";
      info.spec = st.generator;
      info.init_seed = run.init_seed("g3d");
      info.epoch = epoch;
      info.selection_metric = "val_mae";
      info.selection_value = val_mae;
      info.config_hash = run.hash();
      info.extra = json{{"weights", w},
                        {"vseg_checkpoint", vseg_checkpoint.string()},
                        {"gpre_checkpoint", gpre_checkpoint.string()},
                        {"vseg_digest", vseg_before},
                        {"gpre_digest", gpre_before}};
      save_checkpoint(gen.ptr(), info, best_dir);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.losses = losses_json(sums, steps);
    rec.validation = val_mae;
    rec.wall_clock_s = std::chrono::duration<double>(Clock::now() - t0).count();
    rec.seed_digest = run.seed_digest(epoch);
    rec.config_hash = run.hash();
    if (!run.finish_epoch(std::move(rec), nets, opts)) break;
  }

  const std::string vseg_after = vseg.digest();
  const std::string gpre_after = gpre.digest();
  if (vseg_after != vseg_before || gpre_after != gpre_before) {
    throw Error(ErrorKind::Numeric, "frozen guidance parameters changed during training");
  }
  StageResult result = run.result(best_dir);
  result.extra = json{{"vseg_digest_before", vseg_before},
                      {"vseg_digest_after", vseg_after},
                      {"gpre_digest_before", gpre_before},
                      {"gpre_digest_after", gpre_after}};
  return result;
}

Translator::Translator(const fs::path& g3d_checkpoint) {
  configure_torch();
  net_ = load_unet(g3d_checkpoint, &info_);
  if (info_.role != "g3d") {
    throw Error(ErrorKind::Format, g3d_checkpoint.string() + " is not a 3D generator checkpoint");
  }
}

Volume Translator::operator()(const Volume& oct) const {
  torch::NoGradGuard no_grad;
  return to_volume(net_.ptr()->forward(to_tensor(oct)));
}

Volume translate(const fs::path& g3d_checkpoint, const Volume& oct) { return Translator(g3d_checkpoint)(oct); }

}  // namespace projgan
