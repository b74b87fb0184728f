#include "mvhmr/net/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace mvhmr::net {

namespace {

constexpr char kMagic[8] = {'M', 'V', 'H', 'M', 'R', 'C', 'K', '\0'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error("checkpoint " + path.string() + ": " + what);
}

void append_params(const ParamList& params, nlohmann::json& entries, std::vector<float>& data) {
  for (const auto& p : params) {
    const Tensor& t = *p.tensor;
    entries.push_back({{"name", p.name},
                       {"shape", t.shape()},
                       {"dtype", "f32"},
                       {"offset", data.size() * sizeof(float)}});
    for (std::size_t i = 0; i < t.numel(); ++i) data.push_back(static_cast<float>(t.value(i)));
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Network& model, Discriminator* disc,
                     const nlohmann::json& meta) {
  nlohmann::json header;
  header["format_version"] = kCheckpointVersion;
  header["arch"] = model.config().to_json();
  header["meta"] = meta;
  header["tensors"] = nlohmann::json::array();
  std::vector<float> data;
  append_params(model.parameters(), header["tensors"], data);
  header["has_discriminator"] = disc != nullptr;
  if (disc) append_params(disc->parameters(), header["tensors"], data);

  const std::string text = header.dump();
  const std::uint64_t len = text.size();
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(tmp, "cannot open for writing");
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!out) fail(tmp, "write failed");
  }
  // Rename so an interrupted save never clobbers the previous checkpoint.
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(path, "rename failed: " + ec.message());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  char magic[8];
  std::uint64_t len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) fail(path, "not a checkpoint file");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) fail(path, "truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(path, std::string("malformed header: ") + e.what());
  }
  if (header.value("format_version", 0) != kCheckpointVersion) {
    fail(path, "unsupported format version " + header.value("format_version", nlohmann::json()).dump());
  }
  const std::vector<char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  LoadedCheckpoint out;
  out.meta = header.value("meta", nlohmann::json::object());
  out.model = std::make_unique<Network>(ModelConfig::from_json(header.at("arch")));
  ParamList params = out.model->parameters();
  if (header.value("has_discriminator", false)) {
    out.disc = std::make_unique<Discriminator>(0);
    const ParamList dp = out.disc->parameters();
    params.insert(params.end(), dp.begin(), dp.end());
  }
  std::map<std::string, Tensor*> by_name;
  for (const auto& p : params) by_name[p.name] = p.tensor;

  std::size_t filled = 0;
  for (const auto& e : header.at("tensors")) {
    const auto name = e.at("name").get<std::string>();
    const auto it = by_name.find(name);
    if (it == by_name.end()) fail(path, "unexpected tensor '" + name + "'");
    Tensor& t = *it->second;
    if (e.at("shape").get<Shape>() != t.shape()) fail(path, "shape mismatch for '" + name + "'");
    if (e.at("dtype").get<std::string>() != "f32") fail(path, "unsupported dtype for '" + name + "'");
    const auto offset = e.at("offset").get<std::size_t>();
    if (offset + t.numel() * sizeof(float) > payload.size()) fail(path, "data for '" + name + "' is truncated");
    auto dst = t.mutable_data<float>();
    std::memcpy(dst.data(), payload.data() + offset, t.numel() * sizeof(float));
    ++filled;
  }
  if (filled != params.size()) fail(path, "missing tensors (" + std::to_string(params.size() - filled) + ")");
  return out;
}

}  // namespace mvhmr::net
