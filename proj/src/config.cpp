#include "dyntx/config.hpp"

#include <fstream>
#include <set>

#include "dyntx/errors.hpp"

namespace dyntx {

using nlohmann::json;

std::string_view to_string(EncodingVariant v) {
  switch (v) {
    case EncodingVariant::Raw: return "RAW";
    case EncodingVariant::PixelDiff: return "PIXEL_DIFF";
    case EncodingVariant::FeatureDiff: return "FEATURE_DIFF";
  }
  return "?";
}

EncodingVariant parse_encoding(std::string_view s) {
  if (s == "raw" || s == "RAW") return EncodingVariant::Raw;
  if (s == "pixel-diff" || s == "PIXEL_DIFF") return EncodingVariant::PixelDiff;
  if (s == "feature-diff" || s == "FEATURE_DIFF") return EncodingVariant::FeatureDiff;
  throw ConfigError("unknown encoding variant '" + std::string(s) + "'");
}

std::string_view to_string(GanLoss l) {
  switch (l) {
    case GanLoss::NonSaturating: return "nonsaturating";
    case GanLoss::LeastSquares: return "lsgan";
    case GanLoss::Hinge: return "hinge";
  }
  return "?";
}

GanLoss parse_gan_loss(std::string_view s) {
  if (s == "nonsaturating") return GanLoss::NonSaturating;
  if (s == "lsgan") return GanLoss::LeastSquares;
  if (s == "hinge") return GanLoss::Hinge;
  throw ConfigError("unknown gan loss '" + std::string(s) + "'");
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
  std::set<std::string> keys(known.begin(), known.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!keys.count(it.key()))
      throw ConfigError(std::string(what) + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid value for '") + key + "': " + e.what());
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (channels < 1) throw ConfigError("model.channels must be >= 1");
  if (widths.empty()) throw ConfigError("model.widths must list at least one level");
  for (int w : widths)
    if (w < 1) throw ConfigError("model.widths entries must be >= 1");
  for (int w : disc_widths)
    if (w < 1) throw ConfigError("model.disc_widths entries must be >= 1");
  if (disc_widths.empty()) throw ConfigError("model.disc_widths must not be empty");
  if (stem_channels < 1 || dyn_channels < 1 || hidden_channels < 1)
    throw ConfigError("model channel counts must be >= 1");
  if (noise_channels < 0) throw ConfigError("model.noise_channels must be >= 0");
  if (temporal_kernel < 1 || temporal_kernel % 2 == 0)
    throw ConfigError("model.temporal_kernel must be odd and >= 1");
  const int div = 1 << levels();
  if (height < 1 || width < 1 || height % div != 0 || width % div != 0)
    throw ConfigError("frame size " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not divisible by 2^" + std::to_string(levels()));
  const int ddiv = 1 << disc_widths.size();
  if (height % ddiv != 0 || width % ddiv != 0)
    throw ConfigError("frame size is not divisible by 2^" + std::to_string(disc_widths.size()) +
                      " (discriminator depth)");
}

torch::Dtype TrainingConfig::scalar_type() const {
  if (dtype == "float32") return torch::kFloat32;
  if (dtype == "float64") return torch::kFloat64;
  throw ConfigError("dtype must be float32 or float64, got '" + dtype + "'");
}

void TrainingConfig::validate() const {
  model.validate();
  (void)scalar_type();
  if (lr_g < 0 || lr_d < 0) throw ConfigError("learning rates must be non-negative");
  if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1)
    throw ConfigError("adam betas must lie in [0, 1)");
  if (adam_eps <= 0) throw ConfigError("adam_eps must be positive");
  if (weight_adv_spatial < 0 || weight_adv_temporal < 0 || weight_recon < 0)
    throw ConfigError("loss weights must be non-negative");
  if (weight_adv_spatial == 0 && weight_adv_temporal == 0 && weight_recon == 0)
    throw ConfigError("at least one loss weight must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (self_fraction < 0 || self_fraction > 1) throw ConfigError("self_fraction must lie in [0, 1]");
  if (total_steps < 0) throw ConfigError("total_steps must be >= 0");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  if (ref_index < 0) throw ConfigError("ref_index must be >= 0");
  if (plateau_patience < 0 || plateau_window < 1) throw ConfigError("invalid plateau schedule");
  if (plateau_factor <= 0 || plateau_factor > 1) throw ConfigError("plateau_factor must lie in (0, 1]");
}

void to_json(json& j, const ModelConfig& c) {
  j = json{{"channels", c.channels},
           {"height", c.height},
           {"width", c.width},
           {"stem_channels", c.stem_channels},
           {"widths", c.widths},
           {"dyn_channels", c.dyn_channels},
           {"hidden_channels", c.hidden_channels},
           {"noise_channels", c.noise_channels},
           {"consecutive_pixel_diff", c.consecutive_pixel_diff},
           {"disc_widths", c.disc_widths},
           {"temporal_kernel", c.temporal_kernel}};
}

void from_json(const json& j, ModelConfig& c) {
  reject_unknown(j,
                 {"channels", "height", "width", "stem_channels", "widths", "dyn_channels",
                  "hidden_channels", "noise_channels", "consecutive_pixel_diff", "disc_widths",
                  "temporal_kernel"},
                 "model");
  read(j, "channels", c.channels);
  read(j, "height", c.height);
  read(j, "width", c.width);
  read(j, "stem_channels", c.stem_channels);
  read(j, "widths", c.widths);
  read(j, "dyn_channels", c.dyn_channels);
  read(j, "hidden_channels", c.hidden_channels);
  read(j, "noise_channels", c.noise_channels);
  read(j, "consecutive_pixel_diff", c.consecutive_pixel_diff);
  read(j, "disc_widths", c.disc_widths);
  read(j, "temporal_kernel", c.temporal_kernel);
}

void to_json(json& j, const TrainingConfig& c) {
  j = json{{"model", c.model},
           {"lr_g", c.lr_g},
           {"lr_d", c.lr_d},
           {"adam_beta1", c.adam_beta1},
           {"adam_beta2", c.adam_beta2},
           {"adam_eps", c.adam_eps},
           {"weight_adv_spatial", c.weight_adv_spatial},
           {"weight_adv_temporal", c.weight_adv_temporal},
           {"weight_recon", c.weight_recon},
           {"gan_loss", std::string(to_string(c.gan_loss))},
           {"batch_size", c.batch_size},
           {"self_fraction", c.self_fraction},
           {"total_steps", c.total_steps},
           {"encoding", std::string(to_string(c.encoding))},
           {"ref_index", c.ref_index},
           {"seed", c.seed},
           {"checkpoint_every", c.checkpoint_every},
           {"dtype", c.dtype},
           {"plateau_patience", c.plateau_patience},
           {"plateau_window", c.plateau_window},
           {"plateau_factor", c.plateau_factor}};
}

void from_json(const json& j, TrainingConfig& c) {
  reject_unknown(j,
                 {"model", "lr_g", "lr_d", "adam_beta1", "adam_beta2", "adam_eps",
                  "weight_adv_spatial", "weight_adv_temporal", "weight_recon", "gan_loss",
                  "batch_size", "self_fraction", "total_steps", "encoding", "ref_index", "seed",
                  "checkpoint_every", "dtype", "plateau_patience", "plateau_window",
                  "plateau_factor"},
                 "training config");
  if (auto it = j.find("model"); it != j.end()) from_json(*it, c.model);
  read(j, "lr_g", c.lr_g);
  read(j, "lr_d", c.lr_d);
  read(j, "adam_beta1", c.adam_beta1);
  read(j, "adam_beta2", c.adam_beta2);
  read(j, "adam_eps", c.adam_eps);
  read(j, "weight_adv_spatial", c.weight_adv_spatial);
  read(j, "weight_adv_temporal", c.weight_adv_temporal);
  read(j, "weight_recon", c.weight_recon);
  std::string s;
  if (j.contains("gan_loss")) {
    read(j, "gan_loss", s);
    c.gan_loss = parse_gan_loss(s);
  }
  read(j, "batch_size", c.batch_size);
  read(j, "self_fraction", c.self_fraction);
  read(j, "total_steps", c.total_steps);
  if (j.contains("encoding")) {
    read(j, "encoding", s);
    c.encoding = parse_encoding(s);
  }
  read(j, "ref_index", c.ref_index);
  read(j, "seed", c.seed);
  read(j, "checkpoint_every", c.checkpoint_every);
  read(j, "dtype", c.dtype);
  read(j, "plateau_patience", c.plateau_patience);
  read(j, "plateau_window", c.plateau_window);
  read(j, "plateau_factor", c.plateau_factor);
}

TrainingConfig training_config_from_json(const json& j) {
  TrainingConfig c;
  from_json(j, c);
  c.validate();
  return c;
}

TrainingConfig load_training_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return training_config_from_json(j);
}

}  // namespace dyntx
