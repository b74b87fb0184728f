#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "mvhmr/data/dataset.hpp"
#include "mvhmr/net/checkpoint.hpp"
#include "mvhmr/train/gradcheck_suite.hpp"
#include "mvhmr/train/harness.hpp"

namespace fs = std::filesystem;
using namespace mvhmr;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

struct Options {
  std::string config;
  std::string data;
  std::string checkpoint;
  std::string out = "out";
  std::string variant;
  std::string precision;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::size_t> views{1, 2, 3, 4};
  std::size_t epochs = 0;
  std::size_t samples = 0;
  std::size_t eval_samples = 0;
  std::size_t reps = train::kMinTimingReps;
  bool negative_control = false;
};

void write_json(const fs::path& path, const nlohmann::json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

train::TrainConfig train_config(const Options& o) {
  train::TrainConfig cfg = o.config.empty() ? train::TrainConfig::toy() : train::load_config(o.config);
  if (!o.variant.empty()) cfg.model.variant = net::parse_variant(o.variant);
  if (!o.precision.empty()) cfg.precision = parse_dtype(o.precision);
  if (o.seed_set) cfg.seed = o.seed;
  if (o.epochs > 0) cfg.epochs = o.epochs;
  if (!o.data.empty()) cfg.data_dir = o.data;
  cfg.out_dir = o.out;
  if (cfg.data_dir.empty()) throw std::invalid_argument("no dataset: pass --data or set data_dir in the config");
  cfg.validate();
  return cfg;
}

int gen_data(const Options& o) {
  data::SynthConfig cfg;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw std::invalid_argument("cannot open " + o.config);
    cfg = data::SynthConfig::from_json(nlohmann::json::parse(in));
  }
  if (o.samples > 0) cfg.sample_count = o.samples;
  if (o.eval_samples > 0) cfg.eval_count = o.eval_samples;
  cfg.validate();
  data::generate_dataset(cfg, o.seed, o.out);
  std::cout << "wrote " << cfg.sample_count << " samples (" << cfg.eval_count << " eval) to " << o.out << '\n';
  return 0;
}

int run_train(const Options& o) {
  const train::TrainConfig cfg = train_config(o);
  const data::Dataset ds(cfg.data_dir);
  train::Trainer trainer(cfg, ds);
  const auto report = trainer.train([](const train::EpochStats& s) {
    std::cout << "epoch " << s.epoch << " loss " << s.loss << " kp3d " << s.kp3d << " kp2d " << s.kp2d << " pose "
              << s.pose << " disc " << s.disc << " (" << s.seconds << " s)\n";
  });
  const nlohmann::json weights{{"values", cfg.weights.to_json()},
                               {"source", "desk-scale defaults of this implementation, not published values"}};
  write_json(fs::path(o.out) / "run_report.json",
             {{"config", cfg.to_json()}, {"loss_weights", weights}, {"report", report.to_json()}});
  std::cout << "checkpoint " << (fs::path(o.out) / "checkpoint.bin").string() << '\n';
  return 0;
}

int run_eval(const Options& o) {
  const auto ck = net::load_checkpoint(o.checkpoint);
  const data::Dataset ds(o.data);
  const auto results = train::evaluate_views(*ck.model, ds, o.views);
  train::write_view_table(std::cout, results);
  fs::create_directories(o.out);
  for (const auto& r : results) {
    if (!r.ok) continue;
    std::ofstream kv(fs::path(o.out) / ("metrics_" + std::to_string(r.views) + "view.txt"));
    eval::write_report(kv, r.report);
    std::ofstream jl(fs::path(o.out) / ("samples_" + std::to_string(r.views) + "view.jsonl"));
    eval::write_samples_jsonl(jl, r.report);
  }
  write_json(fs::path(o.out) / "eval.json", train::view_results_json(results));
  return 0;
}

int run_ablate(const Options& o) {
  const train::TrainConfig cfg = train_config(o);
  const data::Dataset ds(cfg.data_dir);
  const auto rows = train::ablate(cfg, ds, o.views, [](const std::string& m) { std::cout << m << std::endl; });
  train::write_ablation_table(std::cout, rows);
  write_json(fs::path(o.out) / "ablation.json", train::ablation_json(rows));
  return 0;
}

int run_overhead(const Options& o) {
  std::unique_ptr<net::Network> model;
  if (!o.checkpoint.empty()) {
    model = std::move(net::load_checkpoint(o.checkpoint).model);
  } else {
    net::ModelConfig cfg = o.config.empty() ? net::ModelConfig{} : train::load_config(o.config).model;
    if (!o.variant.empty()) cfg.variant = net::parse_variant(o.variant);
    model = std::make_unique<net::Network>(cfg);
  }
  const auto rows = train::overhead(*model, o.views, o.reps, o.seed);
  train::write_overhead_table(std::cout, rows);
  write_json(fs::path(o.out) / "overhead.json", train::overhead_json(rows));
  return 0;
}

int run_perturb(const Options& o) {
  const auto ck = net::load_checkpoint(o.checkpoint);
  const data::Dataset ds(o.data);
  train::PerturbOptions p;
  p.seed = o.seed;
  p.max_shift_px = 5.0 * static_cast<double>(ds.config().image_size) / 64.0;
  const auto results = train::perturb_eval(*ck.model, ds, o.views, p);
  train::write_perturb_table(std::cout, results);
  write_json(fs::path(o.out) / "perturb.json", train::perturb_json(results));
  return 0;
}

int run_gradcheck(const Options& o) {
  auto cases = train::gradcheck_registry();
  if (o.negative_control) cases.push_back(train::negative_control_case());
  const auto report = train::run_gradcheck_suite(cases, o.seed);
  train::write_suite_report(std::cout, report);
  for (const auto& name : report.failures()) std::cerr << "gradient check failed: " << name << '\n';
  return report.passed() ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view human mesh recovery toolkit"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { o.seed = s, o.seed_set = true; }, "Seed");
  };
  auto views = [&](CLI::App* sub) {
    sub->add_option("--views", o.views, "View counts, comma separated")->delimiter(',')->check(CLI::PositiveNumber);
  };

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic multi-view dataset");
  common(gen);
  gen->add_option("--samples", o.samples, "Total samples");
  gen->add_option("--eval-samples", o.eval_samples, "Samples reserved for evaluation");

  auto* tr = app.add_subcommand("train", "Train a model");
  common(tr);
  tr->add_option("--data", o.data, "Dataset directory");
  tr->add_option("--variant", o.variant, "Architecture variant")->check(CLI::IsMember({"a", "b", "c", "d"}));
  tr->add_option("--precision", o.precision, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
  tr->add_option("--epochs", o.epochs, "Override the epoch count");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint at several view counts");
  common(ev);
  views(ev);
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", o.data, "Dataset directory")->required();

  auto* ab = app.add_subcommand("ablate", "Train and compare variants a-d at equal budget");
  common(ab);
  views(ab);
  ab->add_option("--data", o.data, "Dataset directory");
  ab->add_option("--precision", o.precision, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
  ab->add_option("--epochs", o.epochs, "Override the epoch count");

  auto* oh = app.add_subcommand("overhead", "Parameter, MAC and timing table per view count");
  common(oh);
  views(oh);
  oh->add_option("--checkpoint", o.checkpoint, "Checkpoint file (default: fresh model)")->check(CLI::ExistingFile);
  oh->add_option("--variant", o.variant, "Variant of a fresh model")->check(CLI::IsMember({"a", "b", "c", "d"}));
  oh->add_option("--reps", o.reps, "Timed forward passes per view count (at least 20)");

  auto* pe = app.add_subcommand("perturb-eval", "Clean vs perturbed-crop evaluation");
  common(pe);
  views(pe);
  pe->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  pe->add_option("--data", o.data, "Dataset directory")->required();

  auto* gc = app.add_subcommand("gradcheck", "Run the finite-difference gradient suite");
  common(gc);
  gc->add_flag("--negative-control", o.negative_control, "Also run the deliberately corrupted op");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (gen->parsed()) return gen_data(o);
    if (tr->parsed()) return run_train(o);
    if (ev->parsed()) return run_eval(o);
    if (ab->parsed()) return run_ablate(o);
    if (oh->parsed()) return run_overhead(o);
    if (pe->parsed()) return run_perturb(o);
    if (gc->parsed()) return run_gradcheck(o);
  } catch (const train::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}
