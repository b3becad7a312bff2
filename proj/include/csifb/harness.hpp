/**
 * @file harness.hpp
 * @brief SGCS evaluation of the raw / standardized / standardized+EigJO
 * pipelines over seen and unseen environments.
 *
 * A pipeline turns a channel sample into a sparse-domain codec input:
 *   precode (+EigJO) -> [random gauge] -> 2D DFT -> [standardize]
 * and scores the decoded precoder against its own pre-compression rows:
 *   encode -> quantize -> pack -> unpack -> dequantize -> decode
 *   -> [destandardize | inverse DFT] -> per-subband SGCS.
 *
 * Batch kernels come in an OpenMP version and a serial reference with
 * identical results; aggregation always runs over index-ordered per-sample
 * results, so reports do not depend on the thread count.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csifb/channelgen.hpp"
#include "csifb/codec.hpp"
#include "csifb/precoder.hpp"
#include "csifb/standardizer.hpp"

namespace csifb {

enum class Gauge { canonical, random };

struct PipelineSpec {
  std::string name;
  bool use_standardization = false;
  bool use_eigjo = false;
  Gauge gauge = Gauge::canonical;
};

/// "raw", "std", "std+eigjo" or "eigjo" (EigJO without standardization).
PipelineSpec parse_pipeline(std::string_view name, Gauge gauge = Gauge::canonical);
std::vector<PipelineSpec> parse_pipeline_list(std::string_view csv,
                                              Gauge gauge = Gauge::canonical);

/// |w^H w_hat|^2 / (||w||^2 ||w_hat||^2). Throws UndefinedMetricError for a
/// zero vector and ContractError for a length mismatch.
double sgcs(std::span<const cplx> w, std::span<const cplx> w_hat);

struct SgcsReport {
  std::vector<double> per_subband;  ///< rho_k^2
  double average = 0.0;
  std::map<std::int32_t, double> per_environment;  ///< filled by aggregations
  std::size_t b_total = 0;
  double clip_rate = 0.0;
};

struct PipelineContext {
  const Benchmark* benchmark = nullptr;  ///< required for standardizing pipelines
  EigJoOptions eigjo;
  std::uint64_t gauge_seed = 0;
};

/// Precoder output and the matrix the codec sees.
struct PreparedSample {
  ComplexMatrix reference_rows;  ///< K x N_t, what SGCS is scored against
  ComplexMatrix codec_input;     ///< W_std or W_spar
  ControlInfo ctrl;
};

PreparedSample prepare_sample(const ChannelSample& sample, const PipelineSpec& pipeline,
                              const PipelineContext& ctx, std::uint64_t sample_id);

struct SampleOutcome {
  std::vector<double> per_subband;
  double average = 0.0;
  std::size_t clipped = 0;
  std::size_t b_total = 0;
};

/// Runs the codec chain on a prepared sample. `subband` in thrown
/// UndefinedMetricError messages identifies the failing subband.
SampleOutcome evaluate_prepared(const PreparedSample& prepared, const PipelineSpec& pipeline,
                                const CodecModel& model);

/// prepare_sample + evaluate_prepared for one sample.
SgcsReport evaluate_sample(const ChannelSample& sample, const PipelineSpec& pipeline,
                           const PipelineContext& ctx, const CodecModel& model,
                           std::uint64_t sample_id = 0);

// --- batch kernels -----------------------------------------------------------

/// sample_ids[i] keys the random gauge of samples[i].
std::vector<PreparedSample> prepare_batch(std::span<const ChannelSample> samples,
                                          std::span<const std::uint64_t> sample_ids,
                                          const PipelineSpec& pipeline,
                                          const PipelineContext& ctx);
std::vector<PreparedSample> prepare_batch_serial(std::span<const ChannelSample> samples,
                                                 std::span<const std::uint64_t> sample_ids,
                                                 const PipelineSpec& pipeline,
                                                 const PipelineContext& ctx);
std::vector<SampleOutcome> evaluate_batch(std::span<const PreparedSample> prepared,
                                          const PipelineSpec& pipeline,
                                          const CodecModel& model);
std::vector<SampleOutcome> evaluate_batch_serial(std::span<const PreparedSample> prepared,
                                                 const PipelineSpec& pipeline,
                                                 const CodecModel& model);

// --- experiment ----------------------------------------------------------------

struct ExperimentConfig {
  std::size_t train_env_count = 4;  ///< c: environments [0, c) are "seen"
  std::vector<PipelineSpec> pipelines;
  std::vector<std::size_t> latent_dims{6};
  unsigned bits = 6;
  CodecKind codec = CodecKind::fixed_mask;
  /// Fraction of each seen environment held out for testing (the tail).
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;
  EigJoOptions eigjo;
};

struct ResultRow {
  std::string pipeline;
  std::string env_group;  ///< "seen" or "unseen"
  std::int32_t env_id = -1;  ///< -1 for the pooled group row
  std::size_t latent_dim = 0;
  unsigned bits = 0;
  std::size_t b_total = 0;
  double mean_sgcs = 0.0;
  double p10 = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
  double clip_rate = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ExperimentReport {
  std::vector<ResultRow> rows;

  /// Pooled group row; throws ContractError if absent.
  const ResultRow& group(std::string_view pipeline, std::string_view env_group,
                         std::size_t latent_dim) const;
};

/// Sample partition shared by calibration and evaluation.
struct EnvironmentSplit {
  /// Per seen environment: number of leading samples used for calibration.
  std::vector<std::size_t> calibration_count;
};
EnvironmentSplit split_environments(std::span<const EnvironmentData> envs,
                                    std::size_t train_env_count, double holdout_fraction);

/// Calibrates a codec on the pipeline's codec inputs from the calibration
/// portion of environments [0, c).
CodecModel calibrate_pipeline(std::span<const EnvironmentData> envs,
                              const PipelineSpec& pipeline, const PipelineContext& ctx,
                              const ExperimentConfig& cfg, std::size_t latent_dim);

/// Scores a calibrated codec on held-out seen samples and on every sample of
/// the unseen environments.
std::vector<ResultRow> evaluate_pipeline(std::span<const EnvironmentData> envs,
                                         const PipelineSpec& pipeline,
                                         const PipelineContext& ctx,
                                         const ExperimentConfig& cfg, const CodecModel& model);

/// All pipelines x latent dims. Throws ContractError unless
/// 1 <= c <= number of environments; with c equal to the count the report
/// has no unseen rows.
ExperimentReport run_experiment(std::span<const EnvironmentData> envs,
                                const Benchmark& benchmark, const ExperimentConfig& cfg);

enum class ReportFormat { csv, json };

std::string report_to_csv(const ExperimentReport& report);
std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(std::string_view text);
void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::filesystem::path& path);

}  // namespace csifb
