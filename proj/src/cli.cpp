#include "dyntx/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "dyntx/ablation.hpp"
#include "dyntx/data.hpp"
#include "dyntx/errors.hpp"
#include "dyntx/metrics.hpp"
#include "dyntx/png_io.hpp"
#include "dyntx/training.hpp"
#include "dyntx/visualize.hpp"

namespace dyntx {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "dyntx 0.1.0";

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Flag wins over DYNTX_SEED, which wins over `fallback`.
std::int64_t effective_seed(const std::optional<std::int64_t>& flag, std::int64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("DYNTX_SEED")) {
    try {
      return std::stoll(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("DYNTX_SEED is not an integer: '") + env + "'");
    }
  }
  return fallback;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::vector<std::string>& args,
                    const json& config, const std::string& corpus, std::int64_t seed) {
  fs::create_directories(dir);
  json m{{"command", command},
         {"argv", args},
         {"config", config},
         {"corpus_hash", corpus},
         {"code_version", kVersion},
         {"seed", seed},
         {"started_at", utc_now()}};
  std::ofstream out(dir / "run_manifest.json");
  if (!out) throw IoError("cannot write run manifest in '" + dir.string() + "'");
  out << m.dump(2) << '\n';
}

TargetImage load_target_png(const fs::path& path) {
  if (!fs::exists(path)) throw NotFoundError("target image '" + path.string() + "' not found");
  const Image8 img = read_png(path.string());
  auto t = torch::empty({img.channels, img.height, img.width}, torch::kFloat32);
  auto a = t.accessor<float, 3>();
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) a[c][y][x] = static_cast<float>(from_pixel(img.at(y, x, c)));
  return TargetImage(t);
}

Checkpoint open_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw NotFoundError("checkpoint '" + path.string() + "' not found");
  return load_checkpoint(path);
}

struct Args {
  std::vector<std::string> argv;
  // synth-data
  std::string spec_path, out;
  int count = 1;
  std::optional<std::int64_t> seed;
  // train / ablate
  std::string config_path, data, heldout;
  bool resume = false;
  bool print_config = false;
  std::optional<std::int64_t> steps;
  int log_every = 100;
  // generate / eval / visualize
  std::string checkpoint, source, target, encoding;
  std::string self_data;
  std::size_t max_pairs = 0;
  std::vector<std::string> grid_sources, grid_targets;
};

TrainingConfig config_from_args(const Args& a) {
  TrainingConfig cfg = a.config_path.empty() ? TrainingConfig{} : load_training_config(a.config_path);
  cfg.seed = effective_seed(a.seed, cfg.seed);
  if (a.steps) cfg.total_steps = *a.steps;
  if (!a.encoding.empty()) cfg.encoding = parse_encoding(a.encoding);
  cfg.validate();
  return cfg;
}

int run_synth(const Args& a) {
  SceneSpec spec = load_scene_spec(a.spec_path);
  const std::int64_t base = effective_seed(a.seed, spec.seed);
  if (a.count < 1) throw ConfigError("--count must be >= 1");
  const fs::path out = a.out;
  write_manifest(out, "synth-data", a.argv, json(spec), "", base);
  std::vector<LabeledVideo> items;
  for (int k = 0; k < a.count; ++k) {
    SceneSpec s = spec;
    s.seed = base + k;
    items.push_back(make_moving_shapes(s));
    char name[32];
    std::snprintf(name, sizeof name, "scene_%06d", k);
    save_labeled_video(items.back(), out / name);
  }
  json manifest{{"count", a.count}, {"base_seed", base}, {"spec", json(spec)}, {"corpus_hash", corpus_hash(load_corpus(out))}};
  std::ofstream(out / "manifest.json") << manifest.dump(2) << '\n';
  std::cout << "wrote " << a.count << " scenes to " << out.string() << '\n';
  return 0;
}

int run_train(const Args& a) {
  const TrainingConfig cfg = config_from_args(a);
  if (a.print_config) {
    std::cout << json(cfg).dump(2) << '\n';
    return 0;
  }
  const auto corpus = load_corpus(a.data);
  write_manifest(a.out, "train", a.argv, json(cfg), corpus_hash(corpus), cfg.seed);
  TrainOptions opts;
  opts.run_dir = fs::path(a.out);
  opts.resume = a.resume;
  const int every = a.log_every;
  const auto t0 = std::chrono::steady_clock::now();
  opts.on_step = [&](const LossBundle& l) {
    if (every > 0 && l.step % every == 0) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cerr << "step " << l.step << "  recon " << (l.g_recon ? *l.g_recon : 0.0) << "  g_sp "
                << l.g_adv_spatial << "  g_tp " << l.g_adv_temporal << "  d_sp " << l.d_spatial << "  d_tp "
                << l.d_temporal << "  (" << secs << " s)\n";
    }
  };
  const auto result = train(corpus, cfg, opts);
  std::cout << "trained to step " << result.checkpoint.step << " in " << a.out << '\n';
  return 0;
}

int run_generate(const Args& a) {
  Checkpoint ckpt = open_checkpoint(a.checkpoint);
  const Video source = load_video_dir(a.source);
  const TargetImage target = load_target_png(a.target);
  const EncodingVariant variant = a.encoding.empty() ? ckpt.config.encoding : parse_encoding(a.encoding);
  const auto seed = static_cast<std::uint64_t>(effective_seed(a.seed, 0));
  json cfg = ckpt.config;
  cfg["encoding"] = std::string(to_string(variant));
  write_manifest(a.out, "generate", a.argv, cfg, "", static_cast<std::int64_t>(seed));
  torch::NoGradGuard no_grad;
  const auto codes = encode_dynamics(source, variant, ckpt.nets.generator->frame_encoder, ckpt.config.ref_index,
                                     ckpt.config.model.consecutive_pixel_diff);
  Provenance prov{a.source, a.target, variant, ckpt.step, seed};
  const auto gen = generate(target, codes, ckpt.nets.generator, seed, prov, source.fps());
  save_video_dir(gen.video, a.out);
  json p{{"source_id", prov.source_id},
         {"target_id", prov.target_id},
         {"encoding", std::string(to_string(gen.provenance.variant))},
         {"checkpoint_step", gen.provenance.checkpoint_step},
         {"seed", gen.provenance.seed}};
  std::ofstream(fs::path(a.out) / "provenance.json") << p.dump(2) << '\n';
  std::cout << "generated " << gen.video.num_frames() << " frames in " << a.out << '\n';
  return 0;
}

int run_eval(const Args& a) {
  Checkpoint ckpt = open_checkpoint(a.checkpoint);
  const auto heldout = load_corpus(a.data);
  std::vector<LabeledVideo> self_items;
  if (!a.self_data.empty()) self_items = load_corpus(a.self_data);
  EvalOptions opts;
  opts.variant = a.encoding.empty() ? ckpt.config.encoding : parse_encoding(a.encoding);
  opts.ref_index = ckpt.config.ref_index;
  opts.consecutive_pixel_diff = ckpt.config.model.consecutive_pixel_diff;
  opts.max_pairs = a.max_pairs;
  write_manifest(a.out, "eval", a.argv, json(ckpt.config), corpus_hash(heldout), ckpt.config.seed);
  const auto s = evaluate_transfer(heldout, self_items, ckpt.nets.generator, opts);
  json m{{"encoding", std::string(to_string(opts.variant))},
         {"checkpoint_step", ckpt.step},
         {"cross_pairs", s.cross_pairs},
         {"trajectory_rmse_px", s.cross.trajectory_rmse_px},
         {"appearance_mse", s.cross.appearance_mse},
         {"temporal_smoothness", s.cross.temporal_smoothness},
         {"self_items", s.self_items},
         {"recon_psnr_db", s.self_items ? json(s.self_psnr_db) : json(nullptr)}};
  std::ofstream(fs::path(a.out) / "metrics.json") << m.dump(2) << '\n';
  std::ofstream csv(fs::path(a.out) / "metrics.csv");
  csv << "encoding,cross_pairs,trajectory_rmse_px,appearance_mse,temporal_smoothness,self_items,recon_psnr_db\n"
      << to_string(opts.variant) << ',' << s.cross_pairs << ',' << s.cross.trajectory_rmse_px << ','
      << s.cross.appearance_mse << ',' << s.cross.temporal_smoothness << ',' << s.self_items << ',';
  if (s.self_items) csv << s.self_psnr_db;
  csv << '\n';
  std::cout << m.dump(2) << '\n';
  return 0;
}

int run_ablate(const Args& a) {
  const TrainingConfig cfg = config_from_args(a);
  const auto corpus = load_corpus(a.data);
  const auto heldout = load_corpus(a.heldout);
  write_manifest(a.out, "ablate", a.argv, json(cfg), corpus_hash(corpus), cfg.seed);
  AblationOptions opts;
  opts.out_dir = a.out;
  opts.reuse = true;
  opts.max_pairs = a.max_pairs;
  const auto report = run_ablation(corpus, heldout, cfg, opts);
  std::cout << ablation_markdown(report);
  return 0;
}

int run_visualize(const Args& a) {
  Checkpoint ckpt = open_checkpoint(a.checkpoint);
  const EncodingVariant variant = a.encoding.empty() ? ckpt.config.encoding : parse_encoding(a.encoding);
  const fs::path out = a.out;
  write_manifest(out, "visualize", a.argv, json(ckpt.config), "", ckpt.config.seed);
  torch::NoGradGuard no_grad;
  auto& net = ckpt.nets.generator;
  if (!a.source.empty()) {
    const auto codes = encode_dynamics(load_video_dir(a.source), variant, net->frame_encoder,
                                       ckpt.config.ref_index, ckpt.config.model.consecutive_pixel_diff);
    const auto info = render_dynamics_heatmaps(codes, out / "heatmaps.png");
    std::cout << "wrote " << info.tiles << " heatmap tiles to " << (out / "heatmaps.png").string() << '\n';
  }
  if (!a.grid_sources.empty() || !a.grid_targets.empty()) {
    if (a.grid_sources.empty() || a.grid_targets.empty())
      throw ConfigError("--grid-source and --grid-target must be given together");
    std::vector<Video> sources;
    std::vector<TargetImage> targets;
    for (const auto& s : a.grid_sources) sources.push_back(load_video_dir(s));
    for (const auto& t : a.grid_targets) targets.push_back(load_target_png(t));
    std::vector<std::vector<Video>> generated;
    for (const auto& s : sources) {
      const auto codes = encode_dynamics(s, variant, net->frame_encoder, ckpt.config.ref_index,
                                         ckpt.config.model.consecutive_pixel_diff);
      auto& row = generated.emplace_back();
      for (const auto& t : targets) row.push_back(generate(t, codes, net, 0).video);
    }
    const auto layout = make_comparison_grid(sources, targets, generated, out / "grid.png");
    std::cout << "wrote " << layout.width << "x" << layout.height << " comparison grid to "
              << (out / "grid.png").string() << '\n';
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Dynamics transfer: animate a target image with the motion of a source video", "dyntx"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Args a;
  for (int i = 0; i < argc; ++i) a.argv.emplace_back(argv[i]);

  auto* synth = app.add_subcommand("synth-data", "Render a synthetic moving-shapes corpus");
  synth->add_option("--spec", a.spec_path, "Scene spec JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", a.out, "Output corpus directory")->required();
  synth->add_option("--count", a.count, "Number of scenes (seeds spec.seed + k)")->check(CLI::PositiveNumber);
  synth->add_option("--seed", a.seed, "Base seed (overrides DYNTX_SEED and the scene spec)");

  auto* tr = app.add_subcommand("train", "Train generator and discriminators");
  tr->add_option("--config", a.config_path, "Training config JSON (defaults when omitted)");
  tr->add_option("--data", a.data, "Corpus directory");
  tr->add_option("--out", a.out, "Run directory");
  tr->add_flag("--resume", a.resume, "Continue from the latest checkpoint in the run directory");
  tr->add_flag("--print-config", a.print_config, "Print the effective config with defaults and exit");
  tr->add_option("--steps", a.steps, "Override total_steps");
  tr->add_option("--seed", a.seed, "Override the config seed");
  tr->add_option("--encoding", a.encoding, "raw | pixel-diff | feature-diff");
  tr->add_option("--log-every", a.log_every, "Progress line interval (0 = silent)");

  auto* gen = app.add_subcommand("generate", "Transfer a source video's dynamics onto a target image");
  gen->add_option("--checkpoint", a.checkpoint, "Checkpoint file")->required();
  gen->add_option("--source", a.source, "Source frame directory")->required();
  gen->add_option("--target", a.target, "Target PNG")->required();
  gen->add_option("--encoding", a.encoding, "raw | pixel-diff | feature-diff (default: checkpoint's)");
  gen->add_option("--out", a.out, "Output frame directory")->required();
  gen->add_option("--seed", a.seed, "Generation seed");

  auto* ev = app.add_subcommand("eval", "Transfer metrics on held-out cross pairs");
  ev->add_option("--checkpoint", a.checkpoint, "Checkpoint file")->required();
  ev->add_option("--data", a.data, "Held-out corpus directory")->required();
  ev->add_option("--self-data", a.self_data, "Corpus for self-reconstruction PSNR");
  ev->add_option("--encoding", a.encoding, "raw | pixel-diff | feature-diff (default: checkpoint's)");
  ev->add_option("--max-pairs", a.max_pairs, "Cap on evaluated cross pairs (0 = all)");
  ev->add_option("--out", a.out, "Output directory")->required();

  auto* ab = app.add_subcommand("ablate", "Train and compare all three dynamics encodings");
  ab->add_option("--config", a.config_path, "Training config JSON");
  ab->add_option("--data", a.data, "Training corpus directory")->required();
  ab->add_option("--heldout", a.heldout, "Held-out corpus directory")->required();
  ab->add_option("--out", a.out, "Output directory")->required();
  ab->add_option("--steps", a.steps, "Override total_steps");
  ab->add_option("--seed", a.seed, "Override the config seed");
  ab->add_option("--max-pairs", a.max_pairs, "Cap on evaluated cross pairs (0 = all)");

  auto* vis = app.add_subcommand("visualize", "Dynamics heatmaps and comparison grids");
  vis->add_option("--checkpoint", a.checkpoint, "Checkpoint file")->required();
  vis->add_option("--source", a.source, "Source frame directory for heatmaps");
  vis->add_option("--encoding", a.encoding, "raw | pixel-diff | feature-diff (default: checkpoint's)");
  vis->add_option("--grid-source", a.grid_sources, "Source directories (grid rows)");
  vis->add_option("--grid-target", a.grid_targets, "Target PNGs (grid columns)");
  vis->add_option("--out", a.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) return run_synth(a);
    if (*tr) {
      if (!a.print_config && (a.data.empty() || a.out.empty())) {
        std::cerr << "train: --data and --out are required\n" << tr->help();
        return 1;
      }
      return run_train(a);
    }
    if (*gen) return run_generate(a);
    if (*ev) return run_eval(a);
    if (*ab) return run_ablate(a);
    if (*vis) return run_visualize(a);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const c10::Error& e) {
    std::cerr << "error: " << e.what_without_backtrace() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace dyntx
