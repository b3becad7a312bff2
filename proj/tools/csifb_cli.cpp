/**
 * @file csifb_cli.cpp
 * @brief Command-line front end: dataset generation, codec calibration,
 * pipeline evaluation and benchmark caching.
 *
 * Exit codes: 0 success, 2 contract violation (bad arguments, shapes,
 * ranges), 3 I/O or file-format error.
 */
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "csifb/channelgen.hpp"
#include "csifb/codec.hpp"
#include "csifb/errors.hpp"
#include "csifb/harness.hpp"
#include "csifb/standardizer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace csifb;

namespace {

constexpr int kExitContract = 2;
constexpr int kExitIo = 3;

const char* kModelManifest = "model.json";
const char* kBenchmarkFile = "benchmark.csib";

CodecKind parse_codec(const std::string& name) {
  if (name == "mask") return CodecKind::fixed_mask;
  if (name == "linear") return CodecKind::linear_subspace;
  throw ContractError("unknown codec \"" + name + "\" (expected mask or linear)");
}

std::string codec_name(CodecKind kind) {
  return kind == CodecKind::fixed_mask ? "mask" : "linear";
}

std::string model_file_name(const std::string& pipeline) {
  std::string out = pipeline;
  for (char& c : out)
    if (c == '+') c = '_';
  return out + ".csic";
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

ReportFormat parse_format(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw ContractError("unknown report format \"" + name + "\"");
}

struct GenArgs {
  std::string config;
  std::string profiles;
  std::string out;
  std::size_t samples_per_env = 500;
  std::uint64_t seed = 0;
};

struct CalibrateArgs {
  std::string dataset;
  std::size_t train_envs = 4;
  std::string codec = "mask";
  std::size_t latent = 6;
  unsigned bits = 6;
  std::string out;
  std::string pipelines = "raw,std,std+eigjo";
  std::string benchmark;
  double holdout = 0.2;
  std::uint64_t seed = 0;
  bool random_gauge = false;
};

struct RunArgs {
  std::string dataset;
  std::string model;
  std::string pipelines = "raw,std,std+eigjo";
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 0;
  bool random_gauge = false;
};

struct ExperimentArgs {
  std::string dataset;
  std::size_t train_envs = 4;
  std::string codec = "mask";
  std::vector<std::size_t> latent{2, 4, 6, 8, 12, 16};
  unsigned bits = 6;
  std::string pipelines = "raw,std,std+eigjo";
  std::string out;
  std::string format = "csv";
  double holdout = 0.2;
  std::uint64_t seed = 0;
  bool random_gauge = false;
};

struct BenchmarkArgs {
  std::string config;
  std::string out;
  int target_row = -1;
};

struct InitArgs {
  std::string config = "config.json";
  std::string profiles = "profiles.json";
};

Gauge gauge_of(bool random) { return random ? Gauge::random : Gauge::canonical; }

void cmd_init(const InitArgs& a) {
  save_system_config(a.config, SystemConfig{});
  const auto profiles = default_profiles();
  save_profiles(a.profiles, profiles);
  std::cout << "wrote " << a.config << " and " << a.profiles << "\n";
}

void cmd_gen(const GenArgs& a) {
  const SystemConfig config = load_system_config(a.config);
  const auto profiles = load_profiles(a.profiles);
  if (profiles.empty()) throw ContractError("profile file lists no environments");
  std::vector<EnvironmentData> envs;
  for (const EnvironmentProfile& p : profiles) {
    const EnvironmentProfile keyed = with_run_seed(p, a.seed);
    envs.push_back({p.env_id, generate_environment(config, keyed, a.samples_per_env)});
  }
  write_dataset_dir(a.out, config, envs);
  std::cout << "wrote " << envs.size() << " environments x " << a.samples_per_env
            << " samples to " << a.out << "\n";
}

void cmd_benchmark(const BenchmarkArgs& a) {
  const SystemConfig config = load_system_config(a.config);
  std::optional<std::size_t> row;
  if (a.target_row >= 0) row = static_cast<std::size_t>(a.target_row);
  const Benchmark bench = build_benchmark(config, row);
  write_benchmark(a.out, bench);
  std::cout << "benchmark " << bench.k_subbands() << "x" << bench.n_t() << " peak at ("
            << bench.target_row << ", " << bench.target_col << ") -> " << a.out << "\n";
}

void cmd_calibrate(const CalibrateArgs& a) {
  const auto [config, envs] = read_dataset_dir(a.dataset);
  const Benchmark bench =
      a.benchmark.empty() ? build_benchmark(config) : read_benchmark(a.benchmark);
  ExperimentConfig cfg;
  cfg.train_env_count = a.train_envs;
  cfg.codec = parse_codec(a.codec);
  cfg.bits = a.bits;
  cfg.holdout_fraction = a.holdout;
  cfg.seed = a.seed;
  cfg.pipelines = parse_pipeline_list(a.pipelines, gauge_of(a.random_gauge));
  PipelineContext ctx{&bench, cfg.eigjo, cfg.seed};

  // Calibrate everything before touching the output directory, so a bad
  // argument never leaves a partial model behind.
  std::vector<CodecModel> models;
  for (const PipelineSpec& p : cfg.pipelines)
    models.push_back(calibrate_pipeline(envs, p, ctx, cfg, a.latent));

  fs::create_directories(a.out);
  write_benchmark(fs::path(a.out) / kBenchmarkFile, bench);
  json manifest;
  manifest["codec"] = a.codec;
  manifest["train_env_count"] = a.train_envs;
  manifest["holdout_fraction"] = a.holdout;
  manifest["latent"] = a.latent;
  manifest["bits"] = a.bits;
  manifest["benchmark"] = kBenchmarkFile;
  manifest["models"] = json::object();
  for (std::size_t i = 0; i < models.size(); ++i) {
    const PipelineSpec& p = cfg.pipelines[i];
    const CodecModel& model = models[i];
    const std::string file = model_file_name(p.name);
    write_model(fs::path(a.out) / file, model);
    manifest["models"][p.name] = file;
    std::cout << p.name << ": " << codec_name(model.kind) << " L=" << model.latent_dim
              << " B=" << model.bits_per_element << " alpha=" << model.clip_range << "\n";
  }
  write_text(fs::path(a.out) / kModelManifest, manifest.dump(2) + "\n");
}

void cmd_run(const RunArgs& a) {
  const auto [config, envs] = read_dataset_dir(a.dataset);
  json manifest;
  try {
    manifest = json::parse(read_text(fs::path(a.model) / kModelManifest));
  } catch (const json::exception& e) {
    throw FormatError(std::string(kModelManifest) + ": " + e.what(), 0);
  }
  const Benchmark bench =
      read_benchmark(fs::path(a.model) / manifest.value("benchmark", std::string(kBenchmarkFile)));
  if (bench.k_subbands() != config.k_subbands || bench.n_t() != config.n_t())
    throw ContractError("benchmark shape does not match the dataset");

  ExperimentConfig cfg;
  cfg.train_env_count = manifest.at("train_env_count").get<std::size_t>();
  cfg.holdout_fraction = manifest.at("holdout_fraction").get<double>();
  cfg.seed = a.seed;
  PipelineContext ctx{&bench, cfg.eigjo, cfg.seed};

  ExperimentReport report;
  for (const PipelineSpec& p : parse_pipeline_list(a.pipelines, gauge_of(a.random_gauge))) {
    if (!manifest.at("models").contains(p.name))
      throw ContractError("model directory has no codec for pipeline \"" + p.name + "\"");
    const CodecModel model =
        read_model(fs::path(a.model) / manifest["models"][p.name].get<std::string>());
    if (model.k_subbands != config.k_subbands || model.n_t != config.n_t())
      throw ContractError("codec shape does not match the dataset");
    auto rows = evaluate_pipeline(envs, p, ctx, cfg, model);
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  emit_report(report, parse_format(a.format), a.out);
  for (const ResultRow& r : report.rows)
    if (r.env_id == -1)
      std::cout << r.pipeline << " " << r.env_group << " b_total=" << r.b_total
                << " mean_sgcs=" << r.mean_sgcs << "\n";
}

void cmd_experiment(const ExperimentArgs& a) {
  const auto [config, envs] = read_dataset_dir(a.dataset);
  const Benchmark bench = build_benchmark(config);
  ExperimentConfig cfg;
  cfg.train_env_count = a.train_envs;
  cfg.codec = parse_codec(a.codec);
  cfg.latent_dims = a.latent;
  cfg.bits = a.bits;
  cfg.holdout_fraction = a.holdout;
  cfg.seed = a.seed;
  cfg.pipelines = parse_pipeline_list(a.pipelines, gauge_of(a.random_gauge));
  const ExperimentReport report = run_experiment(envs, bench, cfg);
  emit_report(report, parse_format(a.format), a.out);
  for (const ResultRow& r : report.rows)
    if (r.env_id == -1)
      std::cout << r.pipeline << " L=" << r.latent_dim << " " << r.env_group
                << " b_total=" << r.b_total << " mean_sgcs=" << r.mean_sgcs << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CSI feedback preprocessing: generation, calibration and evaluation"};
  app.require_subcommand(1);

  InitArgs init_args;
  auto* init = app.add_subcommand("init", "Write default system config and profile JSON");
  init->add_option("--config", init_args.config, "Output config JSON");
  init->add_option("--profiles", init_args.profiles, "Output profiles JSON");

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Generate a multi-environment dataset directory");
  gen->add_option("--config", gen_args.config, "System config JSON")->required();
  gen->add_option("--profiles", gen_args.profiles, "Environment profiles JSON")->required();
  gen->add_option("--out", gen_args.out, "Output dataset directory")->required();
  gen->add_option("--samples-per-env", gen_args.samples_per_env, "Samples per environment")
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_args.seed, "Run seed mixed into every profile seed");

  CalibrateArgs cal_args;
  auto* cal = app.add_subcommand("calibrate", "Calibrate one codec per pipeline");
  cal->add_option("--dataset", cal_args.dataset, "Dataset directory")->required();
  cal->add_option("--train-envs", cal_args.train_envs, "Number of seen environments c")
      ->required();
  cal->add_option("--codec", cal_args.codec, "mask or linear")
      ->check(CLI::IsMember({"mask", "linear"}));
  cal->add_option("--latent", cal_args.latent, "Latent dimension L")->required();
  cal->add_option("--bits", cal_args.bits, "Quantization bits per element B")
      ->check(CLI::Range(1, 16));
  cal->add_option("--out", cal_args.out, "Output model directory")->required();
  cal->add_option("--pipelines", cal_args.pipelines, "Comma-separated pipelines");
  cal->add_option("--benchmark", cal_args.benchmark, "Benchmark cache (built if omitted)");
  cal->add_option("--holdout", cal_args.holdout, "Held-out fraction of seen environments");
  cal->add_option("--seed", cal_args.seed, "Seed for the random gauge");
  cal->add_flag("--random-gauge", cal_args.random_gauge, "Randomize raw eigenvector phases");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Evaluate calibrated pipelines and write a report");
  run->add_option("--dataset", run_args.dataset, "Dataset directory")->required();
  run->add_option("--model", run_args.model, "Model directory from calibrate")->required();
  run->add_option("--pipelines", run_args.pipelines, "Comma-separated pipelines");
  run->add_option("--out", run_args.out, "Report path")->required();
  run->add_option("--seed", run_args.seed, "Seed for the random gauge");
  run->add_option("--format", run_args.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  run->add_flag("--random-gauge", run_args.random_gauge, "Randomize raw eigenvector phases");

  ExperimentArgs exp_args;
  auto* exp = app.add_subcommand("experiment", "Calibrate and evaluate over several L");
  exp->add_option("--dataset", exp_args.dataset, "Dataset directory")->required();
  exp->add_option("--train-envs", exp_args.train_envs, "Number of seen environments c");
  exp->add_option("--codec", exp_args.codec, "mask or linear")
      ->check(CLI::IsMember({"mask", "linear"}));
  exp->add_option("--latent", exp_args.latent, "Latent dimensions")->delimiter(',');
  exp->add_option("--bits", exp_args.bits, "Quantization bits per element B")
      ->check(CLI::Range(1, 16));
  exp->add_option("--pipelines", exp_args.pipelines, "Comma-separated pipelines");
  exp->add_option("--out", exp_args.out, "Report path")->required();
  exp->add_option("--format", exp_args.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  exp->add_option("--holdout", exp_args.holdout, "Held-out fraction of seen environments");
  exp->add_option("--seed", exp_args.seed, "Seed for the random gauge");
  exp->add_flag("--random-gauge", exp_args.random_gauge, "Randomize raw eigenvector phases");

  BenchmarkArgs bench_args;
  auto* bench = app.add_subcommand("benchmark-cache", "Build and persist the benchmark");
  bench->add_option("--config", bench_args.config, "System config JSON")->required();
  bench->add_option("--out", bench_args.out, "Output CSIB file")->required();
  bench->add_option("--target-row", bench_args.target_row,
                    "Delay row of the benchmark peak (default ceil(K/5)-1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitContract;
  }

  try {
    if (*init) cmd_init(init_args);
    if (*gen) cmd_gen(gen_args);
    if (*cal) cmd_calibrate(cal_args);
    if (*run) cmd_run(run_args);
    if (*exp) cmd_experiment(exp_args);
    if (*bench) cmd_benchmark(bench_args);
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitContract;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
