/**
 * @file harness.cpp
 * @brief Pipeline evaluation, experiment driver and report emission.
 */
#include "csifb/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "byte_io.hpp"
#include "csifb/errors.hpp"
#include "parallel.hpp"

namespace csifb {

using json = nlohmann::json;

namespace {

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols{
      "pipeline", "env_group", "env_id", "L",   "B",        "b_total",
      "mean_sgcs", "p10",      "p50",    "p90", "clip_rate"};
  return cols;
}

std::uint64_t sample_key(std::int32_t env_id, std::size_t index) {
  return (std::uint64_t{static_cast<std::uint32_t>(env_id)} << 32) | index;
}

std::size_t control_width(const PipelineSpec& pipeline, std::size_t k, std::size_t n_t) {
  return pipeline.use_standardization ? control_bits_width(k, n_t) : 0;
}

struct EnvSlice {
  const EnvironmentData* env;
  std::size_t begin;
  std::size_t end;
};

std::vector<PreparedSample> prepare_slice(const EnvSlice& slice, const PipelineSpec& pipeline,
                                          const PipelineContext& ctx) {
  const auto samples = std::span<const ChannelSample>(slice.env->samples)
                           .subspan(slice.begin, slice.end - slice.begin);
  std::vector<std::uint64_t> ids(samples.size());
  for (std::size_t i = 0; i < ids.size(); ++i)
    ids[i] = sample_key(slice.env->env_id, slice.begin + i);
  return prepare_batch(samples, ids, pipeline, ctx);
}

void require_env_count(std::span<const EnvironmentData> envs, std::size_t c) {
  if (c < 1 || c > envs.size())
    throw ContractError("experiment: need 1 <= train_env_count (" + std::to_string(c) +
                        ") <= number of environments (" + std::to_string(envs.size()) + ")");
}

std::vector<EnvSlice> seen_calibration_slices(std::span<const EnvironmentData> envs,
                                              const ExperimentConfig& cfg) {
  const EnvironmentSplit split =
      split_environments(envs, cfg.train_env_count, cfg.holdout_fraction);
  std::vector<EnvSlice> out;
  for (std::size_t e = 0; e < cfg.train_env_count; ++e)
    out.push_back({&envs[e], 0, split.calibration_count[e]});
  return out;
}

std::vector<EnvSlice> test_slices(std::span<const EnvironmentData> envs,
                                  const ExperimentConfig& cfg) {
  const EnvironmentSplit split =
      split_environments(envs, cfg.train_env_count, cfg.holdout_fraction);
  std::vector<EnvSlice> out;
  for (std::size_t e = 0; e < envs.size(); ++e) {
    const std::size_t begin = e < cfg.train_env_count ? split.calibration_count[e] : 0;
    out.push_back({&envs[e], begin, envs[e].samples.size()});
  }
  return out;
}

ResultRow summarize(const PipelineSpec& pipeline, const std::string& group, std::int32_t env_id,
                    const CodecModel& model, std::size_t b_total,
                    std::span<const SampleOutcome* const> outcomes) {
  ResultRow row;
  row.pipeline = pipeline.name;
  row.env_group = group;
  row.env_id = env_id;
  row.latent_dim = model.latent_dim;
  row.bits = model.bits_per_element;
  row.b_total = b_total;
  if (outcomes.empty()) return row;
  std::vector<double> averages;
  averages.reserve(outcomes.size());
  double sum = 0.0;
  std::size_t clipped = 0;
  for (const SampleOutcome* o : outcomes) {
    averages.push_back(o->average);
    sum += o->average;
    clipped += o->clipped;
  }
  row.mean_sgcs = sum / static_cast<double>(outcomes.size());
  row.p10 = percentile(averages, 0.10);
  row.p50 = percentile(averages, 0.50);
  row.p90 = percentile(averages, 0.90);
  const std::size_t elements = outcomes.size() * model.latent_dim;
  row.clip_rate = elements ? static_cast<double>(clipped) / static_cast<double>(elements) : 0.0;
  return row;
}

// Score one model on prepared test slices and append pooled + per-env rows.
void append_rows(const PipelineSpec& pipeline, const CodecModel& model,
                 std::span<const EnvSlice> slices,
                 const std::vector<std::vector<PreparedSample>>& prepared,
                 std::size_t train_env_count, std::vector<ResultRow>& rows) {
  const std::size_t b_total = model.latent_dim * model.bits_per_element +
                              control_width(pipeline, model.k_subbands, model.n_t);
  std::vector<std::vector<SampleOutcome>> outcomes;
  outcomes.reserve(slices.size());
  for (const auto& batch : prepared) outcomes.push_back(evaluate_batch(batch, pipeline, model));

  for (const char* group : {"seen", "unseen"}) {
    const bool seen = std::string(group) == "seen";
    std::vector<const SampleOutcome*> pooled;
    std::vector<ResultRow> per_env;
    for (std::size_t e = 0; e < slices.size(); ++e) {
      if ((e < train_env_count) != seen) continue;
      std::vector<const SampleOutcome*> env_outcomes;
      for (const SampleOutcome& o : outcomes[e]) env_outcomes.push_back(&o);
      pooled.insert(pooled.end(), env_outcomes.begin(), env_outcomes.end());
      per_env.push_back(
          summarize(pipeline, group, slices[e].env->env_id, model, b_total, env_outcomes));
    }
    // With c equal to the environment count there is no unseen group.
    if (pooled.empty()) continue;
    rows.push_back(summarize(pipeline, group, -1, model, b_total, pooled));
    rows.insert(rows.end(), per_env.begin(), per_env.end());
  }
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

PipelineSpec parse_pipeline(std::string_view name, Gauge gauge) {
  PipelineSpec p;
  p.name = std::string(name);
  p.gauge = gauge;
  if (name == "raw") {
  } else if (name == "std") {
    p.use_standardization = true;
  } else if (name == "std+eigjo") {
    p.use_standardization = true;
    p.use_eigjo = true;
  } else if (name == "eigjo") {
    p.use_eigjo = true;
  } else {
    throw ContractError("unknown pipeline \"" + std::string(name) +
                        "\" (expected raw, std, std+eigjo or eigjo)");
  }
  return p;
}

std::vector<PipelineSpec> parse_pipeline_list(std::string_view csv, Gauge gauge) {
  std::vector<PipelineSpec> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string_view item =
        csv.substr(start, comma == std::string_view::npos ? csv.npos : comma - start);
    if (item.empty()) throw ContractError("pipeline list has an empty entry");
    for (const PipelineSpec& p : out)
      if (p.name == item) throw ContractError("pipeline \"" + p.name + "\" listed twice");
    out.push_back(parse_pipeline(item, gauge));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double sgcs(std::span<const cplx> w, std::span<const cplx> w_hat) {
  if (w.size() != w_hat.size()) throw ContractError("sgcs: vector lengths differ");
  const double nw = norm2(w);
  const double nh = norm2(w_hat);
  if (nw == 0.0 || nh == 0.0) throw UndefinedMetricError("sgcs: undefined for a zero vector");
  return std::norm(inner(w, w_hat)) / (nw * nw * nh * nh);
}

PreparedSample prepare_sample(const ChannelSample& sample, const PipelineSpec& pipeline,
                              const PipelineContext& ctx, std::uint64_t sample_id) {
  PrecodingMatrix pm = precode(sample, pipeline.use_eigjo, ctx.eigjo);
  // EigJO output is gauge-fixed by construction; the random gauge only
  // perturbs raw eigenvectors.
  if (pipeline.gauge == Gauge::random && !pipeline.use_eigjo)
    apply_random_gauge(pm, ctx.gauge_seed, sample_id);
  PreparedSample out;
  ComplexMatrix spar = sparse_transform(pm.rows);
  if (pipeline.use_standardization) {
    if (ctx.benchmark == nullptr)
      throw ContractError("pipeline \"" + pipeline.name + "\" needs a benchmark");
    Standardized s = standardize_sparse(spar, *ctx.benchmark);
    out.codec_input = std::move(s.matrix);
    out.ctrl = s.ctrl;
  } else {
    out.codec_input = std::move(spar);
  }
  out.reference_rows = std::move(pm.rows);
  return out;
}

SampleOutcome evaluate_prepared(const PreparedSample& prepared, const PipelineSpec& pipeline,
                                const CodecModel& model) {
  const std::size_t k_count = prepared.codec_input.rows();
  const std::size_t n_t = prepared.codec_input.cols();
  const std::size_t ctrl_width = control_width(pipeline, k_count, n_t);

  // UE side
  const std::vector<double> z = encode(model, prepared.codec_input);
  SampleOutcome out;
  out.clipped = count_clipped(z, model.clip_range);
  BitString ctrl_bits;
  if (pipeline.use_standardization) ctrl_bits = encode_control(prepared.ctrl, k_count, n_t);
  const Codeword cw =
      pack_codeword(std::move(ctrl_bits), quantize(z, model.bits_per_element, model.clip_range));
  out.b_total = cw.b_total();
  const std::vector<std::uint8_t> wire = cw.bytes();

  // BS side
  const auto [ctrl_rx, payload_rx] =
      unpack_codeword(wire, ctrl_width, model.latent_dim * model.bits_per_element);
  const std::vector<double> z_hat =
      dequantize(payload_rx, model.bits_per_element, model.clip_range, model.latent_dim);
  const ComplexMatrix decoded = decode(model, z_hat);
  const ComplexMatrix w_hat =
      pipeline.use_standardization
          ? destandardize(decoded, decode_control(ctrl_rx, k_count, n_t))
          : inverse_sparse_transform(decoded);

  out.per_subband.resize(k_count);
  double sum = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    try {
      out.per_subband[k] = sgcs(prepared.reference_rows.row(k), w_hat.row(k));
    } catch (const UndefinedMetricError&) {
      throw UndefinedMetricError("sgcs undefined at subband " + std::to_string(k) +
                                 ": decoded precoding vector is zero");
    }
    sum += out.per_subband[k];
  }
  out.average = sum / static_cast<double>(k_count);
  return out;
}

SgcsReport evaluate_sample(const ChannelSample& sample, const PipelineSpec& pipeline,
                           const PipelineContext& ctx, const CodecModel& model,
                           std::uint64_t sample_id) {
  const SampleOutcome o =
      evaluate_prepared(prepare_sample(sample, pipeline, ctx, sample_id), pipeline, model);
  SgcsReport report;
  report.per_subband = o.per_subband;
  report.average = o.average;
  report.b_total = o.b_total;
  report.clip_rate = model.latent_dim
                         ? static_cast<double>(o.clipped) / static_cast<double>(model.latent_dim)
                         : 0.0;
  return report;
}

// ---------------------------------------------------------------------------
// Batch kernels

std::vector<PreparedSample> prepare_batch(std::span<const ChannelSample> samples,
                                          std::span<const std::uint64_t> sample_ids,
                                          const PipelineSpec& pipeline,
                                          const PipelineContext& ctx) {
  if (sample_ids.size() != samples.size())
    throw ContractError("prepare_batch: one sample id per sample required");
  std::vector<PreparedSample> out(samples.size());
  detail::parallel_for(samples.size(), [&](std::size_t i) {
    out[i] = prepare_sample(samples[i], pipeline, ctx, sample_ids[i]);
  });
  return out;
}

std::vector<PreparedSample> prepare_batch_serial(std::span<const ChannelSample> samples,
                                                 std::span<const std::uint64_t> sample_ids,
                                                 const PipelineSpec& pipeline,
                                                 const PipelineContext& ctx) {
  if (sample_ids.size() != samples.size())
    throw ContractError("prepare_batch: one sample id per sample required");
  std::vector<PreparedSample> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    out.push_back(prepare_sample(samples[i], pipeline, ctx, sample_ids[i]));
  return out;
}

std::vector<SampleOutcome> evaluate_batch(std::span<const PreparedSample> prepared,
                                          const PipelineSpec& pipeline,
                                          const CodecModel& model) {
  std::vector<SampleOutcome> out(prepared.size());
  detail::parallel_for(prepared.size(), [&](std::size_t i) {
    out[i] = evaluate_prepared(prepared[i], pipeline, model);
  });
  return out;
}

std::vector<SampleOutcome> evaluate_batch_serial(std::span<const PreparedSample> prepared,
                                                 const PipelineSpec& pipeline,
                                                 const CodecModel& model) {
  std::vector<SampleOutcome> out;
  out.reserve(prepared.size());
  for (const PreparedSample& p : prepared) out.push_back(evaluate_prepared(p, pipeline, model));
  return out;
}

// ---------------------------------------------------------------------------
// Experiment

EnvironmentSplit split_environments(std::span<const EnvironmentData> envs,
                                    std::size_t train_env_count, double holdout_fraction) {
  require_env_count(envs, train_env_count);
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw ContractError("experiment: holdout fraction must lie in (0, 1)");
  EnvironmentSplit split;
  for (std::size_t e = 0; e < train_env_count; ++e) {
    const std::size_t n = envs[e].samples.size();
    if (n < 2)
      throw ContractError("experiment: seen environment " + std::to_string(envs[e].env_id) +
                          " needs at least 2 samples");
    auto held = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
    held = std::clamp<std::size_t>(held, 1, n - 1);
    split.calibration_count.push_back(n - held);
  }
  return split;
}

CodecModel calibrate_pipeline(std::span<const EnvironmentData> envs,
                              const PipelineSpec& pipeline, const PipelineContext& ctx,
                              const ExperimentConfig& cfg, std::size_t latent_dim) {
  std::vector<ComplexMatrix> training;
  for (const EnvSlice& slice : seen_calibration_slices(envs, cfg))
    for (PreparedSample& p : prepare_slice(slice, pipeline, ctx))
      training.push_back(std::move(p.codec_input));
  return calibrate(cfg.codec, training, latent_dim, cfg.bits);
}

std::vector<ResultRow> evaluate_pipeline(std::span<const EnvironmentData> envs,
                                         const PipelineSpec& pipeline,
                                         const PipelineContext& ctx,
                                         const ExperimentConfig& cfg, const CodecModel& model) {
  const auto slices = test_slices(envs, cfg);
  std::vector<std::vector<PreparedSample>> prepared;
  for (const EnvSlice& slice : slices) prepared.push_back(prepare_slice(slice, pipeline, ctx));
  std::vector<ResultRow> rows;
  append_rows(pipeline, model, slices, prepared, cfg.train_env_count, rows);
  return rows;
}

ExperimentReport run_experiment(std::span<const EnvironmentData> envs,
                                const Benchmark& benchmark, const ExperimentConfig& cfg) {
  require_env_count(envs, cfg.train_env_count);
  if (cfg.pipelines.empty()) throw ContractError("experiment: no pipelines");
  PipelineContext ctx;
  ctx.benchmark = &benchmark;
  ctx.eigjo = cfg.eigjo;
  ctx.gauge_seed = cfg.seed;

  const auto calib_slices = seen_calibration_slices(envs, cfg);
  const auto eval_slices = test_slices(envs, cfg);
  ExperimentReport report;
  for (const PipelineSpec& pipeline : cfg.pipelines) {
    // Preprocessing does not depend on L; do it once per pipeline.
    std::vector<ComplexMatrix> training;
    for (const EnvSlice& slice : calib_slices)
      for (PreparedSample& p : prepare_slice(slice, pipeline, ctx))
        training.push_back(std::move(p.codec_input));
    std::vector<std::vector<PreparedSample>> prepared;
    for (const EnvSlice& slice : eval_slices)
      prepared.push_back(prepare_slice(slice, pipeline, ctx));

    const CodecFit fit = fit_codec(cfg.codec, training);
    for (std::size_t latent_dim : cfg.latent_dims) {
      const CodecModel model = instantiate(fit, training, latent_dim, cfg.bits);
      append_rows(pipeline, model, eval_slices, prepared, cfg.train_env_count, report.rows);
    }
  }
  return report;
}

const ResultRow& ExperimentReport::group(std::string_view pipeline, std::string_view env_group,
                                         std::size_t latent_dim) const {
  for (const ResultRow& r : rows)
    if (r.pipeline == pipeline && r.env_group == env_group && r.env_id == -1 &&
        r.latent_dim == latent_dim)
      return r;
  throw ContractError("report has no " + std::string(env_group) + " row for pipeline " +
                      std::string(pipeline) + " at L = " + std::to_string(latent_dim));
}

// ---------------------------------------------------------------------------
// Reports

std::string report_to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const ResultRow& r : report.rows) {
    out << r.pipeline << ',' << r.env_group << ',' << r.env_id << ',' << r.latent_dim << ','
        << r.bits << ',' << r.b_total << ',' << format_double(r.mean_sgcs) << ','
        << format_double(r.p10) << ',' << format_double(r.p50) << ',' << format_double(r.p90)
        << ',' << format_double(r.clip_rate) << "\n";
  }
  return out.str();
}

std::string report_to_json(const ExperimentReport& report) {
  json j;
  j["columns"] = report_columns();
  j["rows"] = json::array();
  for (const ResultRow& r : report.rows) {
    j["rows"].push_back({{"pipeline", r.pipeline},
                         {"env_group", r.env_group},
                         {"env_id", r.env_id},
                         {"L", r.latent_dim},
                         {"B", r.bits},
                         {"b_total", r.b_total},
                         {"mean_sgcs", r.mean_sgcs},
                         {"p10", r.p10},
                         {"p50", r.p50},
                         {"p90", r.p90},
                         {"clip_rate", r.clip_rate}});
  }
  return j.dump(2) + "\n";
}

ExperimentReport report_from_json(std::string_view text) {
  ExperimentReport report;
  try {
    const json j = json::parse(text);
    for (const auto& r : j.at("rows")) {
      ResultRow row;
      row.pipeline = r.at("pipeline").get<std::string>();
      row.env_group = r.at("env_group").get<std::string>();
      row.env_id = r.at("env_id").get<std::int32_t>();
      row.latent_dim = r.at("L").get<std::size_t>();
      row.bits = r.at("B").get<unsigned>();
      row.b_total = r.at("b_total").get<std::size_t>();
      row.mean_sgcs = r.at("mean_sgcs").get<double>();
      row.p10 = r.at("p10").get<double>();
      row.p50 = r.at("p50").get<double>();
      row.p90 = r.at("p90").get<double>();
      row.clip_rate = r.at("clip_rate").get<double>();
      report.rows.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("report JSON: ") + e.what(), 0);
  }
  return report;
}

void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
  detail::write_text_file(path, format == ReportFormat::csv ? report_to_csv(report)
                                                            : report_to_json(report));
}

}  // namespace csifb
