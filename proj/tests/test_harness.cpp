#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "test_util.hpp"

#include "csifb/errors.hpp"
#include "csifb/harness.hpp"

using namespace csifb;

namespace {

std::vector<EnvironmentData> small_dataset(const SystemConfig& c, std::size_t envs,
                                           std::size_t per_env) {
  const auto profiles = default_profiles();
  std::vector<EnvironmentData> out;
  for (std::size_t e = 0; e < envs; ++e)
    out.push_back({profiles[e].env_id, generate_environment(c, profiles[e], per_env)});
  return out;
}

// Fixed-mask model over every cell with a clip range no sample reaches.
CodecModel identity_codec(const SystemConfig& c, double alpha) {
  CodecModel m;
  m.kind = CodecKind::fixed_mask;
  m.k_subbands = c.k_subbands;
  m.n_t = c.n_t();
  m.latent_dim = 2 * m.k_subbands * m.n_t;
  for (std::uint32_t i = 0; i < m.k_subbands * m.n_t; ++i) m.mask.push_back(i);
  m.clip_range = alpha;
  m.bits_per_element = 16;
  return m;
}

// The full std+EigJO chain written against numkit primitives only.
double scripted_std_eigjo(const ChannelSample& s, const Benchmark& bench,
                          const CodecModel& model) {
  const std::size_t k_count = s.config.k_subbands, n_t = s.config.n_t();
  ComplexMatrix w(k_count, n_t);
  for (std::size_t k = 0; k < k_count; ++k) {
    const ComplexMatrix& h = s.subbands[k];
    const EigenResult eig = hermitian_eig(h.adjoint() * h);
    const ComplexVector e = eig.eigenbasis.column(0);
    ComplexVector v(n_t);
    for (std::size_t t = 0; t < n_t; ++t) v[t] = std::conj(h(0, t));
    const cplx c = inner(e, v);
    for (std::size_t t = 0; t < n_t; ++t) w(k, t) = e[t] * c / std::abs(c);
  }
  const ComplexMatrix spar = dft_matrix(k_count).adjoint() * w * dft_matrix(n_t);

  auto best_shift = [](const std::vector<double>& p, const std::vector<double>& b) {
    const std::size_t n = p.size();
    std::size_t best = 0;
    double top = -1.0;
    for (std::size_t m = 0; m < n; ++m) {
      double score = 0.0;
      for (std::size_t i = 0; i < n; ++i) score += p[(i + n - m) % n] * b[i];
      if (score > top) {
        top = score;
        best = m;
      }
    }
    return best;
  };
  std::vector<double> rp(k_count, 0.0), cp(n_t, 0.0);
  for (std::size_t i = 0; i < k_count; ++i)
    for (std::size_t j = 0; j < n_t; ++j) {
      rp[i] += std::abs(spar(i, j));
      cp[j] += std::abs(spar(i, j));
    }
  const std::size_t m = best_shift(rp, bench.row_profile), n = best_shift(cp, bench.col_profile);
  ComplexMatrix wstd(k_count, n_t);
  for (std::size_t i = 0; i < k_count; ++i)
    for (std::size_t j = 0; j < n_t; ++j) wstd((i + m) % k_count, (j + n) % n_t) = spar(i, j);

  const double a = model.clip_range;
  const double step = 2.0 * a / std::pow(2.0, model.bits_per_element);
  auto roundtrip = [&](double x) {
    x = std::clamp(x, -a, a);
    const double idx = std::min(std::floor((x + a) / step), std::pow(2.0, model.bits_per_element) - 1);
    return -a + (idx + 0.5) * step;
  };
  ComplexMatrix decoded(k_count, n_t);
  for (std::uint32_t cell : model.mask) {
    const cplx x = wstd.data()[cell];
    decoded.data()[cell] = cplx(roundtrip(x.real()), roundtrip(x.imag()));
  }
  ComplexMatrix unshifted(k_count, n_t);
  for (std::size_t i = 0; i < k_count; ++i)
    for (std::size_t j = 0; j < n_t; ++j)
      unshifted(i, j) = decoded((i + m) % k_count, (j + n) % n_t);
  const ComplexMatrix w_hat = dft_matrix(k_count) * unshifted * dft_matrix(n_t).adjoint();

  double total = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    const cplx d = inner(w.row(k), w_hat.row(k));
    total += std::norm(d) / (std::pow(norm2(w.row(k)), 2) * std::pow(norm2(w_hat.row(k)), 2));
  }
  return total / static_cast<double>(k_count);
}

}  // namespace

TEST_CASE("sgcs examples, scale invariance and errors") {
  CounterRng rng(61, 1);
  const ComplexVector w = testutil::random_complex(8, 1, rng).column(0);
  CHECK(sgcs(w, w) == doctest::Approx(1.0).epsilon(1e-14));
  ComplexVector rotated = w;
  for (cplx& x : rotated) x *= std::polar(1.0, 1.234);
  CHECK(sgcs(w, rotated) == doctest::Approx(1.0).epsilon(1e-14));
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(sgcs(ComplexVector{1.0, 0.0}, ComplexVector{s, s}) == doctest::Approx(0.5));

  for (int t = 0; t < 100; ++t) {
    const ComplexVector a = testutil::random_complex(8, 1, rng).column(0);
    const ComplexVector b = testutil::random_complex(8, 1, rng).column(0);
    const double base = sgcs(a, b);
    CHECK(base >= 0.0);
    CHECK(base <= 1.0 + 1e-12);
    const cplx ka(rng.uniform(-3, 3), rng.uniform(-3, 3)), kb(rng.uniform(-3, 3), rng.uniform(-3, 3));
    ComplexVector as = a, bs = b;
    for (cplx& x : as) x *= ka;
    for (cplx& x : bs) x *= kb;
    CHECK(sgcs(as, bs) == doctest::Approx(base).epsilon(1e-12));
  }
  CHECK_THROWS_AS(sgcs(ComplexVector(4), w), ContractError);
  CHECK_THROWS_AS(sgcs(ComplexVector(8), w), UndefinedMetricError);
  CHECK_THROWS_AS(sgcs(w, ComplexVector(8)), UndefinedMetricError);
}

TEST_CASE("pipeline names") {
  CHECK(parse_pipeline("raw").use_standardization == false);
  CHECK(parse_pipeline("std").use_standardization);
  CHECK_FALSE(parse_pipeline("std").use_eigjo);
  CHECK(parse_pipeline("std+eigjo").use_eigjo);
  const PipelineSpec ablation = parse_pipeline("eigjo");
  CHECK(ablation.use_eigjo);
  CHECK_FALSE(ablation.use_standardization);
  CHECK(parse_pipeline_list("raw,std,std+eigjo").size() == 3);
  CHECK_THROWS_AS(parse_pipeline("nope"), ContractError);
  CHECK_THROWS_AS(parse_pipeline_list("raw,,std"), ContractError);
  CHECK_THROWS_AS(parse_pipeline_list("raw,raw"), ContractError);
  CHECK_THROWS_AS(parse_pipeline_list(""), ContractError);
}

TEST_CASE("identity codec is lossless for every pipeline") {
  const SystemConfig c = testutil::small_config();
  const Benchmark bench = build_benchmark(c);
  const CodecModel model = identity_codec(c, 4.0);
  PipelineContext ctx{&bench, {}, 7};
  const auto samples = generate_environment(c, default_profiles()[1], 20);
  for (const char* name : {"raw", "std", "std+eigjo", "eigjo"})
    for (Gauge g : {Gauge::canonical, Gauge::random}) {
      const PipelineSpec p = parse_pipeline(name, g);
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const SgcsReport r = evaluate_sample(samples[i], p, ctx, model, i);
        CHECK(r.average == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(r.clip_rate == 0.0);
        CHECK(r.b_total == model.latent_dim * 16 + (p.use_standardization ? 5 : 0));
      }
    }
}

TEST_CASE("L = 0 codec surfaces an undefined metric") {
  const SystemConfig c = testutil::small_config();
  const Benchmark bench = build_benchmark(c);
  CodecModel model = identity_codec(c, 1.0);
  model.latent_dim = 0;
  model.mask.clear();
  PipelineContext ctx{&bench, {}, 0};
  const ChannelSample s = generate_sample(c, default_profiles()[0], 0);
  CHECK_THROWS_AS(evaluate_sample(s, parse_pipeline("std"), ctx, model), UndefinedMetricError);
  try {
    evaluate_sample(s, parse_pipeline("raw"), ctx, model);
  } catch (const UndefinedMetricError& e) {
    CHECK(std::string(e.what()).find("subband 0") != std::string::npos);
  }
}

TEST_CASE("end-to-end chain matches a scripted reimplementation") {
  SystemConfig c;
  c.n_h = 4;
  c.n_v = 2;
  c.n_r = 2;
  c.k_subbands = 4;
  const Benchmark bench = build_benchmark(c);
  const Path paths[2] = {{cplx(0.9, 0.0), 0.0, 0.25, 1.45, 0.1},
                         {cplx(0.2, -0.35), 420e-9, -0.6, 1.8, -0.5}};
  const ChannelSample s = synthesize(c, paths);

  // Codec calibrated on a handful of generated samples.
  PipelineContext ctx{&bench, {}, 0};
  const PipelineSpec p = parse_pipeline("std+eigjo");
  std::vector<ComplexMatrix> training;
  for (const ChannelSample& t : generate_environment(c, default_profiles()[0], 30))
    training.push_back(prepare_sample(t, p, ctx, 0).codec_input);
  const CodecModel model = calibrate(CodecKind::fixed_mask, training, 8, 6);

  const SgcsReport r = evaluate_sample(s, p, ctx, model);
  CHECK(r.b_total == 8 * 6 + 2 + 3);
  CHECK(r.average == doctest::Approx(scripted_std_eigjo(s, bench, model)).epsilon(1e-10));
  double mean = 0.0;
  for (double x : r.per_subband) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0 + 1e-12);
    mean += x / 4.0;
  }
  CHECK(r.average == doctest::Approx(mean).epsilon(1e-14));
}

TEST_CASE("standardization is lossless inside the codec path") {
  // Same codec on W_spar with and without the shift: with the mask moved by
  // the same shift the two chains see identical coefficients.
  const SystemConfig c = testutil::small_config();
  const Benchmark bench = build_benchmark(c);
  PipelineContext ctx{&bench, {}, 0};
  const ChannelSample s = generate_sample(c, default_profiles()[2], 3);
  const PreparedSample std_in = prepare_sample(s, parse_pipeline("std+eigjo"), ctx, 0);
  const PreparedSample raw_in = prepare_sample(s, parse_pipeline("eigjo"), ctx, 0);
  CodecModel std_model = calibrate(CodecKind::fixed_mask, std::vector{std_in.codec_input}, 10, 6);
  CodecModel raw_model = std_model;
  const std::size_t n_t = c.n_t(), k = c.k_subbands;
  for (std::uint32_t& cell : raw_model.mask) {
    const std::size_t i = cell / n_t, j = cell % n_t;
    cell = static_cast<std::uint32_t>(((i + k - std_in.ctrl.m_star) % k) * n_t +
                                      (j + n_t - std_in.ctrl.n_star) % n_t);
  }
  const double a = evaluate_prepared(std_in, parse_pipeline("std+eigjo"), std_model).average;
  const double b = evaluate_prepared(raw_in, parse_pipeline("eigjo"), raw_model).average;
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("batch kernels: parallel equals serial") {
  const SystemConfig c = testutil::small_config();
  const Benchmark bench = build_benchmark(c);
  PipelineContext ctx{&bench, {}, 3};
  const auto samples = generate_environment(c, default_profiles()[4], 40);
  std::vector<std::uint64_t> ids(samples.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = 1000 + i;
  for (const char* name : {"raw", "std", "std+eigjo"}) {
    const PipelineSpec p = parse_pipeline(name, Gauge::random);
    const auto a = prepare_batch(samples, ids, p, ctx);
    const auto b = prepare_batch_serial(samples, ids, p, ctx);
    std::vector<ComplexMatrix> training;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].codec_input == b[i].codec_input);
      CHECK(a[i].reference_rows == b[i].reference_rows);
      CHECK(a[i].ctrl == b[i].ctrl);
      training.push_back(a[i].codec_input);
    }
    const CodecModel m = calibrate(CodecKind::fixed_mask, training, 6, 6);
    const auto oa = evaluate_batch(a, p, m);
    const auto ob = evaluate_batch_serial(b, p, m);
    for (std::size_t i = 0; i < oa.size(); ++i) {
      CHECK(oa[i].per_subband == ob[i].per_subband);
      CHECK(oa[i].clipped == ob[i].clipped);
    }
  }
  CHECK_THROWS_AS(prepare_batch(samples, std::span(ids).first(3), parse_pipeline("raw"), ctx),
                  ContractError);
}

TEST_CASE("environment split") {
  const SystemConfig c = testutil::small_config();
  const auto envs = small_dataset(c, 3, 10);
  const EnvironmentSplit s = split_environments(envs, 2, 0.2);
  CHECK(s.calibration_count == std::vector<std::size_t>{8, 8});
  CHECK_THROWS_AS(split_environments(envs, 0, 0.2), ContractError);
  CHECK_THROWS_AS(split_environments(envs, 4, 0.2), ContractError);
  CHECK_THROWS_AS(split_environments(envs, 2, 0.0), ContractError);
  CHECK_NOTHROW(split_environments(envs, 3, 0.2));
}

TEST_CASE("experiment: identity codec with every environment seen") {
  const SystemConfig c = testutil::small_config();
  const auto envs = small_dataset(c, 3, 10);
  const Benchmark bench = build_benchmark(c);
  ExperimentConfig cfg;
  cfg.train_env_count = 3;
  cfg.pipelines = parse_pipeline_list("raw,std,std+eigjo");
  cfg.latent_dims = {2 * c.k_subbands * c.n_t()};
  cfg.bits = 16;
  const ExperimentReport report = run_experiment(envs, bench, cfg);
  for (const ResultRow& r : report.rows) {
    CHECK(r.env_group == "seen");
    CHECK(r.mean_sgcs == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(report.rows.size() == 3 * 4);
}

TEST_CASE("experiment is deterministic and reports round trip") {
  const SystemConfig c = testutil::small_config();
  const auto envs = small_dataset(c, 3, 20);
  const Benchmark bench = build_benchmark(c);
  ExperimentConfig cfg;
  cfg.train_env_count = 1;
  cfg.pipelines = parse_pipeline_list("raw,std,std+eigjo");
  cfg.latent_dims = {4, 8};
  cfg.bits = 6;
  const ExperimentReport a = run_experiment(envs, bench, cfg);
  const ExperimentReport b = run_experiment(envs, bench, cfg);
  CHECK(report_to_csv(a) == report_to_csv(b));
  CHECK(report_to_json(a) == report_to_json(b));

  // 3 pipelines x 2 L x (seen pooled + 1 env + unseen pooled + 2 envs).
  CHECK(a.rows.size() == 3 * 2 * 5);
  const std::string csv = report_to_csv(a);
  CHECK(csv.rfind("pipeline,env_group,env_id,L,B,b_total,mean_sgcs,p10,p50,p90,clip_rate\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == a.rows.size() + 1);

  const ExperimentReport back = report_from_json(report_to_json(a));
  CHECK(back.rows == a.rows);

  for (const ResultRow& r : a.rows) {
    CHECK(r.mean_sgcs >= 0.0);
    CHECK(r.mean_sgcs <= 1.0 + 1e-12);
    CHECK(r.p10 <= r.p50);
    CHECK(r.p50 <= r.p90);
    CHECK(r.b_total == r.latent_dim * r.bits + (r.pipeline == "raw" ? 0 : 5));
  }
  CHECK(a.group("std", "unseen", 8).latent_dim == 8);
  CHECK_THROWS_AS(a.group("std", "unseen", 5), ContractError);

  CHECK(report_to_csv(ExperimentReport{}) ==
        "pipeline,env_group,env_id,L,B,b_total,mean_sgcs,p10,p50,p90,clip_rate\n");

  const auto dir = testutil::scratch_dir("report");
  emit_report(a, ReportFormat::csv, dir / "r.csv");
  std::ifstream in(dir / "r.csv");
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == csv);
  CHECK_THROWS_AS(emit_report(a, ReportFormat::json, "/nonexistent/dir/r.json"), IoError);
}

TEST_CASE("experiment rejects bad environment counts") {
  const SystemConfig c = testutil::small_config();
  const auto envs = small_dataset(c, 2, 5);
  const Benchmark bench = build_benchmark(c);
  ExperimentConfig cfg;
  cfg.pipelines = parse_pipeline_list("raw");
  cfg.train_env_count = 3;
  CHECK_THROWS_AS(run_experiment(envs, bench, cfg), ContractError);
  cfg.train_env_count = 0;
  CHECK_THROWS_AS(run_experiment(envs, bench, cfg), ContractError);
}

TEST_CASE("seen vs unseen on the default 4/2 split") {
  // Raw and std keep a clear gap. std+EigJO closes it; its pooled seen mean is
  // dominated by how hard each profile is (env 0 is the hardest), so it only
  // has to stay within a small band of zero.
  const SystemConfig c;
  std::vector<EnvironmentData> envs;
  for (const EnvironmentProfile& p : default_profiles())
    envs.push_back({p.env_id, generate_environment(c, with_run_seed(p, 1), 200)});
  ExperimentConfig cfg;
  cfg.train_env_count = 4;
  cfg.pipelines = parse_pipeline_list("raw,std,std+eigjo");
  cfg.latent_dims = {6};
  const ExperimentReport r = run_experiment(envs, build_benchmark(c), cfg);
  auto gap = [&](const char* p) {
    return r.group(p, "seen", 6).mean_sgcs - r.group(p, "unseen", 6).mean_sgcs;
  };
  CHECK(gap("raw") > 0.0);
  CHECK(gap("std") > 0.0);
  CHECK(std::abs(gap("std+eigjo")) < 0.03);
  CHECK(gap("std+eigjo") < gap("std"));
  CHECK(gap("std") < gap("raw"));
}
