#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "dyntx/errors.hpp"
#include "dyntx/training.hpp"

namespace dyntx {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint blobs are written as little-endian");

namespace {

constexpr char kMagic[8] = {'D', 'Y', 'N', 'T', 'X', 'C', 'K', 'P'};
constexpr int kFormatVersion = 1;

std::string dtype_name(torch::Dtype t) {
  if (t == torch::kFloat32) return "float32";
  if (t == torch::kFloat64) return "float64";
  throw ArgumentError("unsupported checkpoint tensor dtype");
}

torch::Dtype dtype_from(const std::string& s) {
  if (s == "float32") return torch::kFloat32;
  if (s == "float64") return torch::kFloat64;
  throw CorruptionError("unknown tensor dtype '" + s + "' in checkpoint");
}

/// Every stored tensor in file order.
std::vector<std::pair<std::string, torch::Tensor>> all_tensors(const Checkpoint& c) {
  auto out = c.nets.named_parameters();
  const auto named = c.nets.named_parameters();
  const auto add_opt = [&](const char* prefix, const Adam& opt, std::size_t first) {
    for (std::size_t i = 0; i < opt.exp_avg().size(); ++i)
      out.emplace_back(std::string(prefix) + "/exp_avg/" + named[first + i].first, opt.exp_avg()[i]);
    for (std::size_t i = 0; i < opt.exp_avg_sq().size(); ++i)
      out.emplace_back(std::string(prefix) + "/exp_avg_sq/" + named[first + i].first, opt.exp_avg_sq()[i]);
  };
  add_opt("opt_g", c.opt_g, 0);
  add_opt("opt_d", c.opt_d, c.opt_g.exp_avg().size());
  return out;
}

json schedule_json(const PlateauSchedule& s) {
  return json{{"lr_scale", s.lr_scale},
              {"best", s.best ? json(*s.best) : json(nullptr)},
              {"bad_windows", s.bad_windows},
              {"window_sum", s.window_sum},
              {"window_count", s.window_count}};
}

PlateauSchedule schedule_from(const json& j) {
  PlateauSchedule s;
  s.lr_scale = j.at("lr_scale").get<double>();
  if (!j.at("best").is_null()) s.best = j.at("best").get<double>();
  s.bad_windows = j.at("bad_windows").get<int>();
  s.window_sum = j.at("window_sum").get<double>();
  s.window_count = j.at("window_count").get<int>();
  return s;
}

struct RawCheckpoint {
  json manifest;
  std::string payload;
};

RawCheckpoint read_raw(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("checkpoint '" + path.string() + "' not found");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw CorruptionError("'" + path.string() + "' is not a checkpoint (bad magic)");
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 8, 8);
  if (len > bytes.size() - 16) throw CorruptionError("checkpoint manifest length exceeds file size");
  RawCheckpoint raw;
  try {
    raw.manifest = json::parse(bytes.substr(16, len));
  } catch (const json::parse_error& e) {
    throw CorruptionError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }
  raw.payload = bytes.substr(16 + len);
  return raw;
}

Checkpoint restore(const RawCheckpoint& raw, const TrainingConfig& cfg) {
  const auto& m = raw.manifest;
  if (m.value("format", 0) != kFormatVersion) throw CorruptionError("unsupported checkpoint format version");
  const auto& entries = m.at("tensors");
  std::uint64_t expected_offset = 0;
  std::map<std::string, json> by_name;
  for (const auto& e : entries) {
    const auto offset = e.at("offset").get<std::uint64_t>();
    const auto nbytes = e.at("nbytes").get<std::uint64_t>();
    if (offset != expected_offset) throw CorruptionError("checkpoint tensor offsets are not contiguous");
    expected_offset += nbytes;
    by_name.emplace(e.at("name").get<std::string>(), e);
  }
  if (expected_offset != m.at("payload_bytes").get<std::uint64_t>() || expected_offset != raw.payload.size())
    throw CorruptionError("checkpoint payload size (" + std::to_string(raw.payload.size()) +
                          " bytes) does not match the manifest (" + std::to_string(expected_offset) + ")");

  Checkpoint ckpt(cfg);
  torch::NoGradGuard no_grad;
  for (auto& [name, tensor] : all_tensors(ckpt)) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ShapeMismatchError(name, "missing from checkpoint");
    const auto& e = it->second;
    const auto shape = e.at("shape").get<std::vector<std::int64_t>>();
    if (shape != tensor.sizes().vec()) {
      std::ostringstream os;
      os << "checkpoint has " << json(shape).dump() << ", architecture expects " << json(tensor.sizes().vec()).dump();
      throw ShapeMismatchError(name, os.str());
    }
    const auto dtype = dtype_from(e.at("dtype").get<std::string>());
    const auto nbytes = e.at("nbytes").get<std::uint64_t>();
    auto stored = torch::empty(shape, torch::TensorOptions().dtype(dtype));
    if (static_cast<std::uint64_t>(stored.nbytes()) != nbytes)
      throw CorruptionError("tensor '" + name + "' byte count does not match its shape");
    std::memcpy(stored.data_ptr(), raw.payload.data() + e.at("offset").get<std::uint64_t>(), nbytes);
    tensor.copy_(stored);
    by_name.erase(it);
  }
  if (!by_name.empty())
    throw ShapeMismatchError(by_name.begin()->first, "stored tensor has no counterpart in the architecture");

  ckpt.step = m.at("step").get<std::int64_t>();
  ckpt.opt_g.step_count = m.at("opt_g").at("step_count").get<std::int64_t>();
  ckpt.opt_g.lr = m.at("opt_g").at("lr").get<double>();
  ckpt.opt_d.step_count = m.at("opt_d").at("step_count").get<std::int64_t>();
  ckpt.opt_d.lr = m.at("opt_d").at("lr").get<double>();
  std::istringstream rs(m.at("rng_state").get<std::string>());
  rs >> ckpt.rng;
  if (!rs) throw CorruptionError("checkpoint rng state is malformed");
  ckpt.schedule = schedule_from(m.at("schedule"));
  return ckpt;
}

}  // namespace

std::string checkpoint_name(std::int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%08lld.ckpt", static_cast<long long>(step));
  return buf;
}

std::optional<fs::path> latest_checkpoint(const fs::path& run_dir) {
  const fs::path dir = run_dir / "checkpoints";
  if (!fs::is_directory(dir)) return std::nullopt;
  static const std::regex pattern(R"(step_(\d{8})\.ckpt)");
  std::optional<fs::path> best;
  long long best_step = -1;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern) && std::stoll(m[1].str()) > best_step) {
      best_step = std::stoll(m[1].str());
      best = entry.path();
    }
  }
  return best;
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
  const auto tensors = all_tensors(ckpt);
  json entries = json::array();
  std::uint64_t offset = 0;
  std::vector<torch::Tensor> blobs;
  for (const auto& [name, t] : tensors) {
    auto c = t.detach().contiguous();
    const auto nbytes = static_cast<std::uint64_t>(c.nbytes());
    entries.push_back({{"name", name},
                       {"dtype", dtype_name(c.scalar_type())},
                       {"shape", c.sizes().vec()},
                       {"offset", offset},
                       {"nbytes", nbytes}});
    offset += nbytes;
    blobs.push_back(std::move(c));
  }
  std::ostringstream rng;
  rng << ckpt.rng;
  json manifest{{"format", kFormatVersion},
                {"step", ckpt.step},
                {"config", ckpt.config},
                {"rng_state", rng.str()},
                {"schedule", schedule_json(ckpt.schedule)},
                {"opt_g", {{"step_count", ckpt.opt_g.step_count}, {"lr", ckpt.opt_g.lr}}},
                {"opt_d", {{"step_count", ckpt.opt_d.step_count}, {"lr", ckpt.opt_d.lr}}},
                {"tensors", entries},
                {"payload_bytes", offset}};
  const std::string text = manifest.dump();
  const std::uint64_t len = text.size();

  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + tmp.string() + "'");
    out.write(kMagic, 8);
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& b : blobs)
      out.write(static_cast<const char*>(b.data_ptr()), static_cast<std::streamsize>(b.nbytes()));
    if (!out) throw IoError("write failed for checkpoint '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at '" + path.string() + "': " + ec.message());
}

nlohmann::json read_checkpoint_manifest(const fs::path& path) { return read_raw(path).manifest; }

Checkpoint load_checkpoint(const fs::path& path) {
  const auto raw = read_raw(path);
  TrainingConfig cfg;
  try {
    cfg = training_config_from_json(raw.manifest.at("config"));
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("checkpoint config is malformed: ") + e.what());
  }
  try {
    return restore(raw, cfg);
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("checkpoint manifest is malformed: ") + e.what());
  }
}

Checkpoint load_checkpoint(const fs::path& path, const TrainingConfig& expected) {
  const auto raw = read_raw(path);
  try {
    return restore(raw, expected);
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("checkpoint manifest is malformed: ") + e.what());
  }
}

}  // namespace dyntx
