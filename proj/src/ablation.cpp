#include "dyntx/ablation.hpp"

#include <fstream>
#include <sstream>

#include "dyntx/errors.hpp"

namespace dyntx {

AblationReport run_ablation(std::span<const LabeledVideo> train_corpus, std::span<const LabeledVideo> heldout,
                            const TrainingConfig& base, const AblationOptions& options) {
  const std::string corpus = corpus_hash(train_corpus);
  const std::string held = corpus_hash(heldout);
  const auto self_items = train_corpus.first(std::min(options.self_items, train_corpus.size()));
  AblationReport report;
  for (auto variant : {EncodingVariant::Raw, EncodingVariant::PixelDiff, EncodingVariant::FeatureDiff}) {
    TrainingConfig cfg = base;
    cfg.encoding = variant;
    TrainOptions topts;
    topts.run_dir = options.out_dir / std::string(to_string(variant));
    topts.resume = options.reuse;
    if (options.on_step) topts.on_step = [&, variant](const LossBundle& l) { options.on_step(variant, l); };
    auto result = train(train_corpus, cfg, topts);

    EvalOptions eopts;
    eopts.variant = variant;
    eopts.ref_index = cfg.ref_index;
    eopts.consecutive_pixel_diff = cfg.model.consecutive_pixel_diff;
    eopts.max_pairs = options.max_pairs;
    const auto summary = evaluate_transfer(heldout, self_items, result.checkpoint.nets.generator, eopts);

    AblationRow row;
    row.variant = variant;
    row.metrics = summary.cross;
    row.cross_pairs = summary.cross_pairs;
    row.corpus_hash = corpus;
    row.heldout_hash = held;
    row.seed = cfg.seed;
    row.steps = result.checkpoint.step;
    report.rows.push_back(row);
  }
  std::ofstream(options.out_dir / "ablation.csv") << ablation_csv(report);
  std::ofstream(options.out_dir / "ablation.md") << ablation_markdown(report);
  return report;
}

std::string ablation_csv(const AblationReport& report) {
  std::ostringstream os;
  os.precision(9);
  os << "variant,trajectory_rmse_px,appearance_mse,recon_psnr_db,temporal_smoothness,cross_pairs,steps,seed,"
        "corpus_hash,heldout_hash\n";
  for (const auto& r : report.rows) {
    os << to_string(r.variant) << ',' << r.metrics.trajectory_rmse_px << ',' << r.metrics.appearance_mse << ',';
    if (r.metrics.recon_psnr_db) os << *r.metrics.recon_psnr_db;
    os << ',' << r.metrics.temporal_smoothness << ',' << r.cross_pairs << ',' << r.steps << ',' << r.seed << ','
       << r.corpus_hash << ',' << r.heldout_hash << '\n';
  }
  return os.str();
}

std::string ablation_markdown(const AblationReport& report) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os << "| encoding | trajectory RMSE (px) | background MSE | self PSNR (dB) | smoothness |\n"
     << "|---|---|---|---|---|\n";
  for (const auto& r : report.rows) {
    os.precision(3);
    os << "| " << to_string(r.variant) << " | " << r.metrics.trajectory_rmse_px << " | ";
    os.precision(5);
    os << r.metrics.appearance_mse << " | ";
    os.precision(2);
    if (r.metrics.recon_psnr_db) os << *r.metrics.recon_psnr_db;
    os << " | ";
    os.precision(4);
    os << r.metrics.temporal_smoothness << " |\n";
  }
  if (!report.rows.empty())
    os << "\ncorpus `" << report.rows.front().corpus_hash.substr(0, 16) << "`, held-out `"
       << report.rows.front().heldout_hash.substr(0, 16) << "`, seed " << report.rows.front().seed << ", "
       << report.rows.front().steps << " steps\n";
  return os.str();
}

}  // namespace dyntx
