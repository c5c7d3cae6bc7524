#include "echo/harness/checkpoint.hpp"

#include "echo/errors.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace echo {

using nlohmann::json;

namespace {

void put_f32(std::string& buf, double v) {
  const float f = static_cast<float>(v);
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  for (int b = 0; b < 4; ++b) buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

double get_f32(const unsigned char* p) {
  uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<uint32_t>(p[b]) << (8 * b);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot read " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& data) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot write " + p.string());
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!f) throw DataError("write failed for " + p.string());
}

}  // namespace

void save_archive(const std::filesystem::path& dir, const Archive& a) {
  json tensors = json::array();
  std::string blob;
  size_t offset = 0;
  for (const auto& e : a.params.entries()) {
    tensors.push_back({{"name", e.name},
                       {"shape", {e.value.rows(), e.value.cols()}},
                       {"offset", offset},
                       {"trainable", e.trainable}});
    // Row-major element order.
    for (Eigen::Index r = 0; r < e.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < e.value.cols(); ++c) put_f32(blob, e.value(r, c));
    }
    offset += static_cast<size_t>(e.value.size());
  }
  const json manifest{{"format_version", kCheckpointFormatVersion},
                      {"kind", a.kind},
                      {"config", a.config},
                      {"config_hash", config_hash(a.config)},
                      {"dtype", "float32-le"},
                      {"scalar_count", offset},
                      {"tensors", tensors},
                      {"extra", a.extra}};

  std::filesystem::path tmp = dir;
  tmp += ".tmp";
  std::filesystem::remove_all(tmp);
  std::filesystem::create_directories(tmp);
  write_file(tmp / "manifest.json", manifest.dump(2) + "\n");
  write_file(tmp / "params.bin", blob);
  std::filesystem::path old = dir;
  old += ".old";
  std::filesystem::remove_all(old);
  if (std::filesystem::exists(dir)) std::filesystem::rename(dir, old);
  std::filesystem::rename(tmp, dir);
  std::filesystem::remove_all(old);
}

Archive load_archive(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("checkpoint directory not found: " + dir.string());
  json m;
  try {
    m = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw DataError((dir / "manifest.json").string() + ": " + e.what());
  }
  Archive a;
  try {
    const int version = m.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw DataError("unsupported checkpoint format version " + std::to_string(version));
    }
    a.kind = m.at("kind").get<std::string>();
    a.config = m.at("config");
    a.config_hash = m.at("config_hash").get<std::string>();
    if (m.contains("extra")) a.extra = m.at("extra");
    if (config_hash(a.config) != a.config_hash) {
      throw DataError("config hash mismatch in " + dir.string() + ": manifest says " + a.config_hash +
                      ", config hashes to " + config_hash(a.config));
    }
    const std::string blob = read_file(dir / "params.bin");
    const size_t expected = m.at("scalar_count").get<size_t>();
    if (blob.size() != 4 * expected) {
      throw DataError("truncated archive " + (dir / "params.bin").string() + ": expected " +
                      std::to_string(4 * expected) + " bytes, found " + std::to_string(blob.size()));
    }
    const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
    for (const auto& t : m.at("tensors")) {
      const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
      const size_t off = t.at("offset").get<size_t>();
      if (shape.size() != 2 || off + static_cast<size_t>(shape[0] * shape[1]) > expected) {
        throw DataError("bad tensor entry " + t.dump());
      }
      Matrix v(shape[0], shape[1]);
      size_t k = off;
      for (Eigen::Index r = 0; r < v.rows(); ++r) {
        for (Eigen::Index c = 0; c < v.cols(); ++c) v(r, c) = get_f32(bytes + 4 * k++);
      }
      a.params.add(t.at("name").get<std::string>(), std::move(v), t.value("trainable", true));
    }
  } catch (const json::exception& e) {
    throw DataError("invalid manifest in " + dir.string() + ": " + e.what());
  }
  return a;
}

void save_checkpoint(const std::filesystem::path& dir, const ModelConfig& config,
                     const ag::ParamStore& params, const json& extra) {
  save_archive(dir, Archive{"echo_model", json(config), config_hash(config), params, extra});
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  Archive a = load_archive(dir);
  if (a.kind != "echo_model") throw DataError(dir.string() + " holds a '" + a.kind + "' archive, not a model");
  Checkpoint c;
  try {
    c.config = a.config.get<ModelConfig>();
  } catch (const json::exception& e) {
    throw DataError("invalid model config in " + dir.string() + ": " + e.what());
  }
  c.params = std::move(a.params);
  c.extra = std::move(a.extra);
  return c;
}

Checkpoint load_checkpoint(const std::filesystem::path& dir, const ModelConfig& expected) {
  Checkpoint c = load_checkpoint(dir);
  const std::string have = config_hash(c.config), want = config_hash(expected);
  if (have != want) {
    throw DataError("config hash mismatch: checkpoint " + dir.string() + " has " + have +
                    ", requested model shape hashes to " + want);
  }
  return c;
}

}  // namespace echo
