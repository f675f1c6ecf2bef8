#include "dyntx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dyntx/encoders.hpp"
#include "dyntx/errors.hpp"

namespace dyntx {

std::vector<Vec2> foreground_centroids(const Video& video, double background) {
  const auto frames = video.frames().to(torch::kFloat64);
  const auto h = video.height(), w = video.width();
  const auto xs = torch::arange(w, torch::kFloat64) + 0.5;
  const auto ys = torch::arange(h, torch::kFloat64) + 0.5;
  std::vector<Vec2> out;
  for (std::int64_t t = 0; t < video.num_frames(); ++t) {
    const auto weight = (frames[t] - background).abs().sum(0);  // H×W
    const double mass = weight.sum().item<double>();
    if (!(mass > 1e-9)) throw MetricError("frame " + std::to_string(t) + " has no foreground mass", static_cast<int>(t));
    out.push_back({(weight.sum(0) * xs).sum().item<double>() / mass,
                   (weight.sum(1) * ys).sum().item<double>() / mass});
  }
  return out;
}

double trajectory_error(const Video& generated, const Trajectory& gt, double background) {
  if (static_cast<std::int64_t>(gt.num_frames()) != generated.num_frames())
    throw ArgumentError("trajectory_error: generated and ground-truth lengths differ");
  const auto c = foreground_centroids(generated, background);
  double sq = 0;
  for (std::size_t t = 0; t < c.size(); ++t) {
    if (gt.centroids[t].empty()) throw ArgumentError("trajectory_error: ground truth has no shapes");
    const Vec2 g = gt.centroids[t][0];
    sq += (c[t].x - g.x) * (c[t].x - g.x) + (c[t].y - g.y) * (c[t].y - g.y);
  }
  return std::sqrt(sq / static_cast<double>(c.size()));
}

double trajectory_error(const Video& generated, const Trajectory& gt) {
  const double bg = generated.frames().to(torch::kFloat64).flatten().median().item<double>();
  return trajectory_error(generated, gt, bg);
}

double appearance_error(const Video& generated, const TargetImage& target,
                        std::span<const torch::Tensor> fg_masks) {
  if (static_cast<std::int64_t>(fg_masks.size()) != generated.num_frames())
    throw ArgumentError("appearance_error: need one mask per frame");
  const auto frames = generated.frames().to(torch::kFloat64);
  const auto tgt = target.pixels().to(torch::kFloat64);
  double total = 0;
  for (std::int64_t t = 0; t < generated.num_frames(); ++t) {
    const auto keep = fg_masks[static_cast<std::size_t>(t)].logical_not().unsqueeze(0).expand_as(tgt);
    const auto sq = (frames[t] - tgt).square().masked_select(keep);
    if (sq.numel() == 0) throw MetricError("frame " + std::to_string(t) + " has no background pixels", static_cast<int>(t));
    total += sq.mean().item<double>();
  }
  return total / static_cast<double>(generated.num_frames());
}

torch::Tensor disc_mask(std::span<const Vec2> centres, double radius, int height, int width) {
  const auto ys = (torch::arange(height, torch::kFloat64) + 0.5).unsqueeze(1);
  const auto xs = (torch::arange(width, torch::kFloat64) + 0.5).unsqueeze(0);
  auto mask = torch::zeros({height, width}, torch::kBool);
  for (const auto& c : centres) mask |= ((xs - c.x).square() + (ys - c.y).square()) <= radius * radius;
  return mask;
}

double circumradius(const ShapeSpec& shape) {
  return shape.kind == ShapeKind::Square ? shape.radius * std::sqrt(2.0) : shape.radius;
}

double psnr_db(const torch::Tensor& a, const torch::Tensor& b) {
  const double mse = (a.to(torch::kFloat64) - b.to(torch::kFloat64)).square().mean().item<double>();
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(4.0 / mse);
}

double temporal_smoothness(const Video& video) {
  if (video.num_frames() < 2) return 0;
  const auto f = video.frames().to(torch::kFloat64);
  const auto t = video.num_frames();
  return (f.narrow(0, 1, t - 1) - f.narrow(0, 0, t - 1)).abs().mean().item<double>();
}

TransferMetrics pair_metrics(const Video& generated, const TransferPair& pair,
                             std::span<const LabeledVideo> corpus, double mask_dilation) {
  const auto& src = corpus[pair.source_index];
  const auto& tgt = corpus[pair.target_index];
  const double background = tgt.spec.background;
  TransferMetrics m;
  m.trajectory_rmse_px = trajectory_error(generated, src.trajectory, background);

  double radius = 0;
  for (const auto& s : src.spec.shapes) radius = std::max(radius, circumradius(s));
  for (const auto& s : tgt.spec.shapes) radius = std::max(radius, circumradius(s));
  radius += mask_dilation;
  const int h = static_cast<int>(generated.height()), w = static_cast<int>(generated.width());
  std::vector<torch::Tensor> masks;
  for (std::int64_t t = 0; t < generated.num_frames(); ++t) {
    std::vector<Vec2> centres = src.trajectory.centroids[static_cast<std::size_t>(t)];
    for (const auto& c : tgt.trajectory.centroids.front()) centres.push_back(c);
    masks.push_back(disc_mask(centres, radius, h, w));
  }
  m.appearance_mse = appearance_error(generated, pair.target, masks);
  if (pair.mode == PairMode::Self && pair.gt_video) m.recon_psnr_db = psnr_db(generated.frames(), pair.gt_video->frames());
  m.temporal_smoothness = temporal_smoothness(generated);
  return m;
}

EvalSummary evaluate_transfer(std::span<const LabeledVideo> heldout, std::span<const LabeledVideo> self_items,
                              GeneratorNet& net, const EvalOptions& options) {
  torch::NoGradGuard no_grad;
  EvalSummary out;
  auto run = [&](const TransferPair& pair) {
    auto codes = encode_dynamics(pair.source, options.variant, net->frame_encoder, options.ref_index,
                                 options.consecutive_pixel_diff);
    return generate(pair.target, codes, net, 0).video;
  };
  for (std::size_t i = 0; i < heldout.size(); ++i) {
    for (std::size_t j = 0; j < heldout.size(); ++j) {
      if (i == j) continue;
      if (options.max_pairs > 0 && out.cross_pairs >= options.max_pairs) break;
      const auto pair = make_pair(heldout, i, j);
      const auto m = pair_metrics(run(pair), pair, heldout, options.mask_dilation);
      out.cross.trajectory_rmse_px += m.trajectory_rmse_px;
      out.cross.appearance_mse += m.appearance_mse;
      out.cross.temporal_smoothness += m.temporal_smoothness;
      ++out.cross_pairs;
    }
  }
  if (out.cross_pairs > 0) {
    const double n = static_cast<double>(out.cross_pairs);
    out.cross.trajectory_rmse_px /= n;
    out.cross.appearance_mse /= n;
    out.cross.temporal_smoothness /= n;
  }
  for (std::size_t i = 0; i < self_items.size(); ++i) {
    const auto pair = make_pair(self_items, i, i);
    out.self_psnr_db += psnr_db(run(pair).frames(), pair.source.frames());
    ++out.self_items;
  }
  if (out.self_items > 0) {
    out.self_psnr_db /= static_cast<double>(out.self_items);
    out.cross.recon_psnr_db = out.self_psnr_db;
  }
  return out;
}

double temporal_shuffle_win_rate(std::span<const LabeledVideo> items, TemporalDiscriminator& net,
                                 std::uint64_t seed, int shuffles) {
  if (items.empty()) throw ArgumentError("temporal_shuffle_win_rate: no items");
  std::mt19937_64 rng(seed);
  std::size_t wins = 0;
  for (const auto& item : items) {
    const auto& v = item.video;
    if (v.num_frames() < 2) throw ArgumentError("temporal_shuffle_win_rate: videos need at least 2 frames");
    const double real = temporal_score(v, net).logit;
    double shuffled = 0;
    for (int k = 0; k < shuffles; ++k) {
      std::vector<std::int64_t> order(static_cast<std::size_t>(v.num_frames()));
      std::iota(order.begin(), order.end(), 0);
      while (std::is_sorted(order.begin(), order.end())) std::shuffle(order.begin(), order.end(), rng);
      Video perm(v.frames().index_select(0, torch::tensor(order, torch::kInt64)), v.fps());
      shuffled += temporal_score(perm, net).logit;
    }
    if (real > shuffled / shuffles) ++wins;
  }
  return static_cast<double>(wins) / static_cast<double>(items.size());
}

}  // namespace dyntx
