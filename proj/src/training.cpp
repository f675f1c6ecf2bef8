#include "dyntx/training.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dyntx/errors.hpp"

namespace dyntx {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Networks and optimiser

Networks::Networks(const ModelConfig& cfg, torch::Dtype dtype, std::int64_t seed) {
  cfg.validate();
  torch::manual_seed(static_cast<std::uint64_t>(seed));
  generator = GeneratorNet(cfg);
  spatial = SpatialDiscriminator(cfg);
  temporal = TemporalDiscriminator(cfg);
  generator->to(dtype);
  spatial->to(dtype);
  temporal->to(dtype);
}

std::vector<torch::Tensor> Networks::generator_parameters() const { return generator->parameters(); }

std::vector<torch::Tensor> Networks::discriminator_parameters() const {
  auto params = spatial->parameters();
  for (auto& p : temporal->parameters()) params.push_back(p);
  return params;
}

std::vector<std::pair<std::string, torch::Tensor>> Networks::named_parameters() const {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& p : generator->named_parameters()) out.emplace_back("generator/" + p.key(), p.value());
  for (const auto& p : spatial->named_parameters()) out.emplace_back("spatial/" + p.key(), p.value());
  for (const auto& p : temporal->named_parameters()) out.emplace_back("temporal/" + p.key(), p.value());
  return out;
}

Adam::Adam(std::vector<torch::Tensor> params, double lr_, double beta1, double beta2, double eps)
    : lr(lr_), params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    exp_avg_.push_back(torch::zeros_like(p));
    exp_avg_sq_.push_back(torch::zeros_like(p));
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) {
    if (p.mutable_grad().defined()) {
      p.mutable_grad().detach_();
      p.mutable_grad().zero_();
    }
  }
}

void Adam::step() {
  torch::NoGradGuard no_grad;
  ++step_count;
  const double bc1 = 1 - std::pow(beta1_, static_cast<double>(step_count));
  const double bc2 = 1 - std::pow(beta2_, static_cast<double>(step_count));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& g = params_[i].grad();
    if (!g.defined()) continue;
    exp_avg_[i].mul_(beta1_).add_(g, 1 - beta1_);
    exp_avg_sq_[i].mul_(beta2_).addcmul_(g, g, 1 - beta2_);
    auto denom = (exp_avg_sq_[i] / bc2).sqrt_().add_(eps_);
    params_[i].addcdiv_(exp_avg_[i], denom, -lr / bc1);
  }
}

Checkpoint::Checkpoint(const TrainingConfig& cfg)
    : config(cfg),
      nets(cfg.model, cfg.scalar_type(), cfg.seed),
      opt_g(nets.generator_parameters(), cfg.lr_g, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps),
      opt_d(nets.discriminator_parameters(), cfg.lr_d, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps),
      rng(static_cast<std::uint64_t>(cfg.seed)) {
  config.validate();
}

// ---------------------------------------------------------------------------
// Losses

namespace {

struct BatchTensors {
  torch::Tensor sources;       // B×T×C×H×W
  torch::Tensor targets;       // B×C×H×W
  torch::Tensor source_first;  // B×C×H×W, the real-pair conditioning image
  torch::Tensor self_index;    // indices of self pairs (int64)
  torch::Tensor gt;            // ground truth for self pairs, S×T×C×H×W
};

BatchTensors stack_batch(std::span<const TransferPair> batch, torch::Dtype dtype) {
  if (batch.empty()) throw ArgumentError("empty training batch");
  std::vector<torch::Tensor> sources, targets, gt;
  std::vector<std::int64_t> self;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& p = batch[i];
    if (p.source.frames().sizes() != batch[0].source.frames().sizes())
      throw ArgumentError("all pairs in a batch must share the source video shape");
    sources.push_back(p.source.frames());
    targets.push_back(p.target.pixels());
    if (p.mode == PairMode::Self && p.gt_video) {
      self.push_back(static_cast<std::int64_t>(i));
      gt.push_back(p.gt_video->frames());
    }
  }
  BatchTensors out;
  out.sources = torch::stack(sources).to(dtype);
  out.targets = torch::stack(targets).to(dtype);
  out.source_first = out.sources.select(1, 0);
  out.self_index = torch::tensor(self, torch::kInt64);
  if (!gt.empty()) out.gt = torch::stack(gt).to(dtype);
  return out;
}

double checked(const torch::Tensor& t, std::int64_t step, const char* term) {
  const double v = t.item<double>();
  if (!std::isfinite(v))
    throw NumericalError(std::string("non-finite loss term '") + term + "' at step " + std::to_string(step),
                         step, term);
  return v;
}

bool has_temporal(const BatchTensors& b) { return b.sources.size(1) >= 2; }

torch::Tensor forward_generator(Networks& nets, const BatchTensors& b, const TrainingConfig& cfg,
                                std::uint64_t noise_seed) {
  auto codes = encode_dynamics(b.sources, cfg.encoding, nets.generator->frame_encoder, cfg.ref_index,
                               cfg.model.consecutive_pixel_diff);
  return nets.generator->forward(b.targets, codes, noise_seed);
}

std::optional<torch::Tensor> recon_term(const torch::Tensor& fake, const BatchTensors& b) {
  if (b.self_index.numel() == 0) return std::nullopt;
  return (fake.index_select(0, b.self_index) - b.gt).abs().mean();
}

}  // namespace

LossBundle compute_losses(std::span<const TransferPair> batch, Networks& nets, const TrainingConfig& cfg) {
  torch::NoGradGuard no_grad;
  const auto b = stack_batch(batch, nets.generator->parameters().front().scalar_type());
  const auto fake = forward_generator(nets, b, cfg, 0);
  LossBundle out;
  const auto real_sp = nets.spatial->forward(b.sources, b.source_first);
  const auto fake_sp = nets.spatial->forward(fake, b.targets);
  out.d_spatial = checked(discriminator_loss(real_sp, fake_sp, cfg.gan_loss), 0, "d_spatial");
  out.g_adv_spatial = checked(generator_adv_loss(fake_sp, cfg.gan_loss), 0, "g_adv_spatial");
  if (has_temporal(b)) {
    const auto real_tp = nets.temporal->forward(b.sources);
    const auto fake_tp = nets.temporal->forward(fake);
    out.d_temporal = checked(discriminator_loss(real_tp, fake_tp, cfg.gan_loss), 0, "d_temporal");
    out.g_adv_temporal = checked(generator_adv_loss(fake_tp, cfg.gan_loss), 0, "g_adv_temporal");
  }
  if (auto r = recon_term(fake, b)) out.g_recon = checked(*r, 0, "g_recon");
  return out;
}

LossBundle compute_losses(const TransferPair& pair, Networks& nets, const TrainingConfig& cfg) {
  return compute_losses(std::span<const TransferPair>(&pair, 1), nets, cfg);
}

// ---------------------------------------------------------------------------
// Updates

LossBundle train_step(std::span<const TransferPair> batch, Checkpoint& ckpt) {
  const TrainingConfig& cfg = ckpt.config;
  auto& nets = ckpt.nets;
  const std::int64_t step = ckpt.step + 1;
  ckpt.opt_g.lr = cfg.lr_g * ckpt.schedule.lr_scale;
  ckpt.opt_d.lr = cfg.lr_d * ckpt.schedule.lr_scale;

  const auto b = stack_batch(batch, cfg.scalar_type());
  const std::uint64_t noise_seed = ckpt.rng();
  const bool temporal = has_temporal(b);
  const bool train_spatial = cfg.weight_adv_spatial > 0;
  const bool train_temporal = temporal && cfg.weight_adv_temporal > 0;
  LossBundle out;
  out.step = step;

  auto fake = forward_generator(nets, b, cfg, noise_seed);

  // Discriminator update on detached fakes.
  {
    ckpt.opt_d.zero_grad();
    const auto fake_d = fake.detach();
    torch::Tensor d_total;
    {
      std::optional<torch::NoGradGuard> guard;
      if (!train_spatial) guard.emplace();
      auto d_sp = discriminator_loss(nets.spatial->forward(b.sources, b.source_first),
                                     nets.spatial->forward(fake_d, b.targets), cfg.gan_loss);
      out.d_spatial = checked(d_sp, step, "d_spatial");
      if (train_spatial) d_total = d_sp;
    }
    if (temporal) {
      std::optional<torch::NoGradGuard> guard;
      if (!train_temporal) guard.emplace();
      auto d_tp = discriminator_loss(nets.temporal->forward(b.sources), nets.temporal->forward(fake_d),
                                     cfg.gan_loss);
      out.d_temporal = checked(d_tp, step, "d_temporal");
      if (train_temporal) d_total = d_total.defined() ? d_total + d_tp : d_tp;
    }
    if (d_total.defined()) {
      d_total.backward();
      ckpt.opt_d.step();
    }
  }

  // Generator + encoder update against the refreshed discriminators.
  ckpt.opt_g.zero_grad();
  torch::Tensor g_total;
  auto accumulate = [&](const torch::Tensor& term, double weight) {
    g_total = g_total.defined() ? g_total + weight * term : weight * term;
  };
  {
    std::optional<torch::NoGradGuard> guard;
    if (!train_spatial) guard.emplace();
    auto g_sp = generator_adv_loss(nets.spatial->forward(fake, b.targets), cfg.gan_loss);
    out.g_adv_spatial = checked(g_sp, step, "g_adv_spatial");
    if (train_spatial) accumulate(g_sp, cfg.weight_adv_spatial);
  }
  if (temporal) {
    std::optional<torch::NoGradGuard> guard;
    if (!train_temporal) guard.emplace();
    auto g_tp = generator_adv_loss(nets.temporal->forward(fake), cfg.gan_loss);
    out.g_adv_temporal = checked(g_tp, step, "g_adv_temporal");
    if (train_temporal) accumulate(g_tp, cfg.weight_adv_temporal);
  }
  if (auto r = recon_term(fake, b)) {
    out.g_recon = checked(*r, step, "g_recon");
    if (cfg.weight_recon > 0) accumulate(*r, cfg.weight_recon);
  }
  if (g_total.defined()) {
    g_total.backward();
    ckpt.opt_g.step();
  }
  ckpt.opt_d.zero_grad();
  ckpt.step = step;

  if (cfg.plateau_patience > 0) {
    auto& s = ckpt.schedule;
    s.window_sum += out.generator_total(cfg);
    if (++s.window_count == cfg.plateau_window) {
      const double mean = s.window_sum / s.window_count;
      s.window_sum = 0;
      s.window_count = 0;
      if (!s.best || mean < *s.best) {
        s.best = mean;
        s.bad_windows = 0;
      } else if (++s.bad_windows >= cfg.plateau_patience) {
        s.lr_scale *= cfg.plateau_factor;
        s.bad_windows = 0;
      }
    }
  }
  return out;
}

std::vector<TransferPair> next_batch(std::span<const LabeledVideo> corpus, Checkpoint& ckpt) {
  const auto& cfg = ckpt.config;
  const int n_self = corpus.size() < 2 ? cfg.batch_size
                                       : static_cast<int>(std::lround(cfg.batch_size * cfg.self_fraction));
  std::vector<TransferPair> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));
  for (int i = 0; i < cfg.batch_size; ++i) {
    const std::uint64_t seed = ckpt.rng();
    batch.push_back(sample_pair(corpus, i < n_self ? PairMode::Self : PairMode::Cross, seed));
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Loop

namespace {

constexpr const char* kCsvHeader = "step,g_adv_spatial,g_adv_temporal,g_recon,d_spatial,d_temporal";

std::string csv_row(const LossBundle& l) {
  std::ostringstream os;
  os.precision(9);
  os << l.step << ',' << l.g_adv_spatial << ',' << l.g_adv_temporal << ',';
  if (l.g_recon) os << *l.g_recon;
  os << ',' << l.d_spatial << ',' << l.d_temporal;
  return os.str();
}

void prepare_csv(const fs::path& path, std::int64_t keep_through) {
  std::vector<std::string> rows;
  if (keep_through > 0) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (std::stoll(line.substr(0, line.find(','))) <= keep_through) rows.push_back(line);
    }
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << kCsvHeader << '\n';
  for (const auto& r : rows) out << r << '\n';
}

void check_corpus(std::span<const LabeledVideo> corpus, const TrainingConfig& cfg) {
  if (corpus.empty()) throw ConfigError("training corpus is empty");
  for (const auto& item : corpus) {
    const auto& v = item.video;
    if (v.channels() != cfg.model.channels || v.height() != cfg.model.height ||
        v.width() != cfg.model.width)
      throw ConfigError("corpus video shape does not match the model configuration");
    if (cfg.ref_index >= v.num_frames()) throw ConfigError("ref_index exceeds the corpus video length");
  }
}

}  // namespace

TrainResult train(std::span<const LabeledVideo> corpus, const TrainingConfig& cfg,
                  const TrainOptions& options) {
  cfg.validate();
  check_corpus(corpus, cfg);
  std::optional<Checkpoint> ckpt;
  fs::path ckpt_dir;
  if (options.run_dir) {
    ckpt_dir = *options.run_dir / "checkpoints";
    fs::create_directories(ckpt_dir);
    std::ofstream(*options.run_dir / "config.json") << nlohmann::json(cfg).dump(2) << '\n';
    if (options.resume) {
      if (auto latest = latest_checkpoint(*options.run_dir)) {
        TrainingConfig stored = training_config_from_json(read_checkpoint_manifest(*latest).at("config"));
        stored.total_steps = cfg.total_steps;
        stored.checkpoint_every = cfg.checkpoint_every;
        if (!(stored == cfg))
          throw ConfigError("run directory '" + options.run_dir->string() +
                            "' holds a checkpoint trained with a different configuration");
        ckpt.emplace(load_checkpoint(*latest, cfg));
      }
    }
  }
  if (!ckpt) ckpt.emplace(cfg);
  fs::path csv_path;
  std::ofstream csv;
  if (options.run_dir) {
    csv_path = *options.run_dir / "losses.csv";
    prepare_csv(csv_path, ckpt->step);
    csv.open(csv_path, std::ios::app);
  }

  std::vector<LossBundle> curve;
  while (ckpt->step < cfg.total_steps) {
    auto batch = next_batch(corpus, *ckpt);
    LossBundle loss;
    try {
      loss = train_step(batch, *ckpt);
    } catch (const NumericalError&) {
      if (options.run_dir)
        save_checkpoint(*ckpt, ckpt_dir / ("emergency_" + checkpoint_name(ckpt->step)));
      throw;
    }
    curve.push_back(loss);
    if (csv.is_open()) csv << csv_row(loss) << '\n' << std::flush;
    if (options.on_step) options.on_step(loss);
    if (options.run_dir && (ckpt->step % cfg.checkpoint_every == 0 || ckpt->step == cfg.total_steps))
      save_checkpoint(*ckpt, ckpt_dir / checkpoint_name(ckpt->step));
  }
  if (options.run_dir && cfg.total_steps == 0) save_checkpoint(*ckpt, ckpt_dir / checkpoint_name(0));
  return TrainResult{std::move(*ckpt), std::move(curve)};
}

}  // namespace dyntx
