#include "mvhmr/data/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace mvhmr::data {

namespace {

static_assert(std::endian::native == std::endian::little, "dataset I/O assumes a little-endian host");

constexpr std::size_t kSampleFloats = body::kShapeDims + body::kBodyJoints * 3;
constexpr std::size_t kViewFloats = 3 + 3 + body::kJoints * 3 + body::kJoints * 2;

// The volatile store keeps GCC 11's SLP vectorizer (-O3, AVX-512) from
// eliding the narrowing.
double f32(double v) {
  volatile float f = static_cast<float>(v);
  return f;
}

template <typename M>
void round_f32(M& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = f32(m(i, j));
}

void put(std::vector<std::uint8_t>& out, double v) {
  const float f = static_cast<float>(v);
  const auto* p = reinterpret_cast<const std::uint8_t*>(&f);
  out.insert(out.end(), p, p + sizeof(float));
}

template <typename M>
void put_all(std::vector<std::uint8_t>& out, const M& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put(out, m(i, j));
}

struct Reader {
  const std::uint8_t* p;
  double next() {
    float f;
    std::memcpy(&f, p, sizeof(float));
    p += sizeof(float);
    return f;
  }
  template <typename M>
  void fill(M& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = next();
  }
};

[[noreturn]] void io_fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error("dataset " + path.string() + ": " + what);
}

nlohmann::json layout_json(std::size_t views, std::size_t H, std::size_t W, std::size_t C) {
  nlohmann::json fields = nlohmann::json::array();
  fields.push_back({{"name", "beta"}, {"type", "f32"}, {"count", body::kShapeDims}});
  fields.push_back({{"name", "theta_b"}, {"type", "f32"}, {"count", body::kBodyJoints * 3}});
  nlohmann::json per_view = nlohmann::json::array();
  per_view.push_back({{"name", "camera_R"}, {"type", "f32"}, {"count", 3}});
  per_view.push_back({{"name", "camera_t"}, {"type", "f32"}, {"count", 3}});
  per_view.push_back({{"name", "j3d_cam"}, {"type", "f32"}, {"count", body::kJoints * 3}});
  per_view.push_back({{"name", "j2d"}, {"type", "f32"}, {"count", body::kJoints * 2}});
  per_view.push_back({{"name", "image"}, {"type", "u8"}, {"count", H * W * C}});
  return {{"sample", fields}, {"view", per_view}, {"views", views}, {"endianness", "little"}};
}

}  // namespace

camera::Intrinsics SynthConfig::intrinsics() const {
  camera::Intrinsics K;
  K.focal = focal;
  K.cx = static_cast<double>(image_size) / 2;
  K.cy = static_cast<double>(image_size) / 2;
  K.height = static_cast<int>(image_size);
  K.width = static_cast<int>(image_size);
  return K;
}

void SynthConfig::validate() const {
  if (sample_count == 0) throw std::invalid_argument("synth: sample_count must be positive");
  if (eval_count >= sample_count) throw std::invalid_argument("synth: eval_count must be below sample_count");
  if (views == 0) throw std::invalid_argument("synth: views must be positive");
  if (image_size < 8) throw std::invalid_argument("synth: image_size must be at least 8");
  if (channels == 0 || channels > kRenderChannels) throw std::invalid_argument("synth: channels must be 1..3");
  if (vertex_count < body::kMinVertexCount) throw std::invalid_argument("synth: vertex_count too small");
  intrinsics().validate();
  rig.validate();
}

nlohmann::json SynthConfig::to_json() const {
  return {{"sample_count", sample_count}, {"eval_count", eval_count}, {"views", views},
          {"image_size", image_size},     {"channels", channels},     {"focal", focal},
          {"body_seed", body_seed},       {"vertex_count", vertex_count}, {"rig", rig.to_json()}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "sample_count") c.sample_count = value.get<std::size_t>();
    else if (key == "eval_count") c.eval_count = value.get<std::size_t>();
    else if (key == "views") c.views = value.get<std::size_t>();
    else if (key == "image_size") c.image_size = value.get<std::size_t>();
    else if (key == "channels") c.channels = value.get<std::size_t>();
    else if (key == "focal") c.focal = value.get<double>();
    else if (key == "body_seed") c.body_seed = value.get<std::uint64_t>();
    else if (key == "vertex_count") c.vertex_count = value.get<std::size_t>();
    else if (key == "rig") c.rig = CameraRig::from_json(value);
    else throw std::invalid_argument("synth: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

MultiViewSample generate_sample(const SynthConfig& cfg, const body::BodyModelParams& model, std::uint64_t seed,
                                std::size_t index) {
  Rng rng(sample_seed(seed, index));
  body::BodyState state = sample_body(rng);
  round_f32(state.theta_b);
  round_f32(state.beta);
  const body::BodyOutput out = body::forward(model, state);
  const camera::Intrinsics K = cfg.intrinsics();

  MultiViewSample s;
  s.beta = state.beta;
  s.theta_b = state.theta_b;
  for (auto cam : sample_cameras(rng, cfg.views, out.joints.row(0).transpose(), cfg.rig)) {
    round_f32(cam.R);
    round_f32(cam.t);
    ViewRecord v;
    v.camera = cam;
    v.j3d_cam = camera::to_camera(out.joints, cam);
    v.j2d = camera::project_camera_frame(v.j3d_cam, K);
    v.image = render_view(v.j3d_cam, model.parents, K, cfg.channels);
    round_f32(v.j3d_cam);
    round_f32(v.j2d);
    s.views.push_back(std::move(v));
  }
  return s;
}

std::size_t record_bytes(std::size_t views, std::size_t height, std::size_t width, std::size_t channels) {
  return kSampleFloats * sizeof(float) + views * (kViewFloats * sizeof(float) + height * width * channels);
}

void encode_sample(const MultiViewSample& s, std::vector<std::uint8_t>& out) {
  put_all(out, s.beta);
  put_all(out, s.theta_b);
  for (const auto& v : s.views) {
    put_all(out, v.camera.R);
    put_all(out, v.camera.t);
    put_all(out, v.j3d_cam);
    put_all(out, v.j2d);
    out.insert(out.end(), v.image.pixels.begin(), v.image.pixels.end());
  }
}

MultiViewSample decode_sample(const std::uint8_t* record, std::size_t views, std::size_t height, std::size_t width,
                              std::size_t channels) {
  Reader r{record};
  MultiViewSample s;
  r.fill(s.beta);
  r.fill(s.theta_b);
  for (std::size_t i = 0; i < views; ++i) {
    ViewRecord v;
    r.fill(v.camera.R);
    r.fill(v.camera.t);
    r.fill(v.j3d_cam);
    r.fill(v.j2d);
    const std::size_t n = height * width * channels;
    v.image = Image{height, width, channels, std::vector<std::uint8_t>(r.p, r.p + n)};
    r.p += n;
    s.views.push_back(std::move(v));
  }
  return s;
}

void generate_dataset(const SynthConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) io_fail(dir, "cannot create directory: " + ec.message());
  const auto model = body::build_template(cfg.body_seed, cfg.vertex_count);
  const std::size_t rec = record_bytes(cfg.views, cfg.image_size, cfg.image_size, cfg.channels);

  const auto bin = dir / "samples.bin";
  {
    std::ofstream out(bin, std::ios::binary | std::ios::trunc);
    if (!out) io_fail(bin, "cannot open for writing");
    std::vector<std::uint8_t> buf;
    buf.reserve(rec);
    for (std::size_t i = 0; i < cfg.sample_count; ++i) {
      buf.clear();
      encode_sample(generate_sample(cfg, model, seed, i), buf);
      out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
    if (!out) io_fail(bin, "write failed");
  }

  nlohmann::json m;
  m["format_version"] = kDatasetVersion;
  m["seed"] = seed;
  m["sample_count"] = cfg.sample_count;
  m["views_per_sample"] = cfg.views;
  m["image"] = {{"height", cfg.image_size}, {"width", cfg.image_size}, {"channels", cfg.channels}};
  m["config"] = cfg.to_json();
  m["split"] = {{"train", {0, cfg.sample_count - cfg.eval_count}},
                {"eval", {cfg.sample_count - cfg.eval_count, cfg.sample_count}}};
  m["record_bytes"] = rec;
  m["layout"] = layout_json(cfg.views, cfg.image_size, cfg.image_size, cfg.channels);
  const auto manifest = dir / "manifest.json";
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) io_fail(manifest, "cannot open for writing");
  out << m.dump(2) << '\n';
  if (!out) io_fail(manifest, "write failed");
}

Dataset::Dataset(const std::filesystem::path& dir) {
  const auto manifest = dir / "manifest.json";
  std::ifstream in(manifest);
  if (!in) io_fail(manifest, "cannot open for reading");
  try {
    manifest_ = nlohmann::json::parse(in);
    if (manifest_.at("format_version").get<int>() != kDatasetVersion) io_fail(manifest, "unsupported format_version");
    cfg_ = SynthConfig::from_json(manifest_.at("config"));
    count_ = manifest_.at("sample_count").get<std::size_t>();
    record_ = manifest_.at("record_bytes").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    io_fail(manifest, std::string("malformed manifest: ") + e.what());
  }
  if (count_ != cfg_.sample_count || record_ != record_bytes(cfg_.views, cfg_.image_size, cfg_.image_size, cfg_.channels)) {
    io_fail(manifest, "inconsistent record layout");
  }
  const auto bin = dir / "samples.bin";
  std::ifstream data(bin, std::ios::binary);
  if (!data) io_fail(bin, "cannot open for reading");
  bytes_.assign(std::istreambuf_iterator<char>(data), std::istreambuf_iterator<char>());
  if (bytes_.size() != count_ * record_) {
    io_fail(bin, "size " + std::to_string(bytes_.size()) + " does not match manifest (" +
                     std::to_string(count_ * record_) + ")");
  }
  model_ = body::build_template(cfg_.body_seed, cfg_.vertex_count);
}

MultiViewSample Dataset::sample(std::size_t index) const {
  if (index >= count_) throw std::out_of_range("dataset: sample index out of range");
  return decode_sample(bytes_.data() + index * record_, cfg_.views, cfg_.image_size, cfg_.image_size, cfg_.channels);
}

}  // namespace mvhmr::data
