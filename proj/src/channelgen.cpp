/**
 * @file channelgen.cpp
 * @brief Geometric channel synthesis, CSID encoding and JSON profile files.
 */
#include "csifb/channelgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "json.hpp"

#include "byte_io.hpp"
#include "csifb/errors.hpp"
#include "csifb/rng.hpp"

namespace csifb {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kPathStream = 0x70617468;  // "path"

std::string env_file_name(std::int32_t env_id) {
  return "env_" + std::to_string(env_id) + ".csid";
}

}  // namespace

void SystemConfig::validate() const {
  if (n_h == 0 || n_v == 0 || n_r == 0 || k_subbands == 0 || n_gran == 0)
    throw ContractError("SystemConfig: every dimension must be >= 1");
  if (!(subcarrier_spacing > 0.0) || !(carrier_freq > 0.0))
    throw ContractError("SystemConfig: frequencies must be positive");
}

void EnvironmentProfile::validate() const {
  if (num_paths == 0) throw ContractError("EnvironmentProfile: num_paths must be >= 1");
  if (!(angle_spread >= 0.0 && angle_spread <= kPi))
    throw ContractError("EnvironmentProfile: angle_spread must lie in [0, pi]");
  if (!(delay_spread > 0.0 && delay_spread <= max_delay))
    throw ContractError("EnvironmentProfile: need 0 < delay_spread <= max_delay");
  if (!std::isfinite(mean_azimuth) || !std::isfinite(mean_zenith) ||
      !std::isfinite(rician_k_db))
    throw ContractError("EnvironmentProfile: non-finite angle or K-factor");
}

ComplexVector steering_vector(const SystemConfig& config, double azimuth,
                              double zenith) {
  const double u = std::sin(zenith) * std::sin(azimuth);
  const double w = std::cos(zenith);
  ComplexVector a(config.n_t());
  for (std::size_t h = 0; h < config.n_h; ++h)
    for (std::size_t v = 0; v < config.n_v; ++v)
      a[h * config.n_v + v] = std::polar(1.0, kPi * (h * u + v * w));
  return a;
}

ComplexVector receive_steering_vector(std::size_t n_r, double angle) {
  ComplexVector a(n_r);
  const double u = std::sin(angle);
  for (std::size_t i = 0; i < n_r; ++i) a[i] = std::polar(1.0, kPi * i * u);
  return a;
}

std::vector<Path> draw_paths(const EnvironmentProfile& profile,
                             std::uint64_t sample_index) {
  profile.validate();
  const std::size_t count = profile.num_paths;
  std::vector<Path> paths(count);
  std::vector<double> power(count);

  const double k_lin = std::pow(10.0, profile.rician_k_db / 10.0);
  const double los_share = profile.los ? (count == 1 ? 1.0 : k_lin / (k_lin + 1.0)) : 0.0;
  // Laplace scale giving a standard deviation of angle_spread.
  const double scale = profile.angle_spread / std::numbers::sqrt2;

  double nlos_total = 0.0;
  for (std::size_t p = 0; p < count; ++p) {
    CounterRng rng(profile.seed, sample_index, kPathStream + p);
    Path& path = paths[p];
    const bool is_los = profile.los && p == 0;
    if (is_los) {
      path.delay = 0.0;
      path.azimuth = profile.mean_azimuth;
      path.zenith = profile.mean_zenith;
    } else {
      path.delay = rng.truncated_exponential(profile.delay_spread, profile.max_delay);
      path.azimuth = rng.laplace(profile.mean_azimuth, scale);
      path.zenith = std::clamp(rng.laplace(profile.mean_zenith, scale), 0.0, kPi);
      power[p] = std::exp(-path.delay / profile.delay_spread);
      nlos_total += power[p];
    }
    path.arrival = rng.uniform(-0.5 * kPi, 0.5 * kPi);
    path.gain = std::polar(1.0, rng.unit_phase());
  }
  const double nlos_share = 1.0 - los_share;
  for (std::size_t p = 0; p < count; ++p) {
    const bool is_los = profile.los && p == 0;
    const double share = is_los ? los_share : nlos_share * power[p] / nlos_total;
    paths[p].gain *= std::sqrt(share);
  }
  return paths;
}

ChannelSample synthesize(const SystemConfig& config, std::span<const Path> paths) {
  config.validate();
  const std::size_t n_t = config.n_t();
  const std::size_t n_r = config.n_r;
  ChannelSample sample{config, {}};
  sample.subbands.assign(config.k_subbands, ComplexMatrix(n_r, n_t));

  const double subband_step = config.n_gran * config.subcarrier_spacing;
  for (const Path& path : paths) {
    const ComplexVector at = steering_vector(config, path.azimuth, path.zenith);
    const ComplexVector ar = receive_steering_vector(n_r, path.arrival);
    for (std::size_t k = 0; k < config.k_subbands; ++k) {
      const double f = static_cast<double>(k) * subband_step;
      const cplx coeff = path.gain * std::polar(1.0, -2.0 * kPi * f * path.delay);
      ComplexMatrix& h = sample.subbands[k];
      for (std::size_t r = 0; r < n_r; ++r) {
        const cplx rc = coeff * ar[r];
        auto row = h.row(r);
        for (std::size_t t = 0; t < n_t; ++t) row[t] += rc * std::conj(at[t]);
      }
    }
  }
  return sample;
}

ChannelSample generate_sample(const SystemConfig& config,
                              const EnvironmentProfile& profile,
                              std::uint64_t sample_index) {
  const auto paths = draw_paths(profile, sample_index);
  return synthesize(config, paths);
}

void round_to_storage(ChannelSample& sample) {
  for (ComplexMatrix& h : sample.subbands)
    for (cplx& x : h.data())
      x = cplx(static_cast<float>(x.real()), static_cast<float>(x.imag()));
}

std::vector<ChannelSample> generate_environment(const SystemConfig& config,
                                                const EnvironmentProfile& profile,
                                                std::size_t count, std::uint64_t first) {
  config.validate();
  profile.validate();
  std::vector<ChannelSample> out(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto& sample = out[static_cast<std::size_t>(i)];
    sample = generate_sample(config, profile, first + static_cast<std::uint64_t>(i));
    round_to_storage(sample);
  }
  return out;
}

std::vector<ChannelSample> generate_environment_serial(const SystemConfig& config,
                                                       const EnvironmentProfile& profile,
                                                       std::size_t count,
                                                       std::uint64_t first) {
  std::vector<ChannelSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(generate_sample(config, profile, first + i));
    round_to_storage(out.back());
  }
  return out;
}

std::vector<EnvironmentProfile> default_profiles() {
  auto make = [](std::int32_t id, std::uint32_t paths, bool los, double k_db,
                 double az, double zen, double spread, double ds) {
    EnvironmentProfile p;
    p.env_id = id;
    p.num_paths = paths;
    p.los = los;
    p.rician_k_db = k_db;
    p.mean_azimuth = az;
    p.mean_zenith = zen;
    p.angle_spread = spread;
    p.delay_spread = ds;
    p.max_delay = 1e-6;
    p.seed = 1000 + static_cast<std::uint64_t>(id) * 7919;
    return p;
  };
  return {
      make(0, 6, true, 9.0, -0.60, 1.45, 0.08, 60e-9),
      make(1, 8, true, 3.0, -0.10, 1.60, 0.12, 120e-9),
      make(2, 10, false, 0.0, 0.35, 1.50, 0.15, 200e-9),
      make(3, 7, true, 6.0, 0.75, 1.40, 0.10, 90e-9),
      // Held out: angles and delay statistics outside the training set.
      make(4, 12, false, 0.0, -1.00, 1.70, 0.20, 300e-9),
      make(5, 5, true, 4.0, 1.10, 1.30, 0.10, 150e-9),
  };
}

EnvironmentProfile with_run_seed(EnvironmentProfile profile, std::uint64_t run_seed) {
  if (run_seed != 0) profile.seed = mix_key(profile.seed, run_seed);
  return profile;
}

// ---------------------------------------------------------------------------
// CSID

std::vector<std::uint8_t> encode_dataset(const SystemConfig& config,
                                         std::span<const ChannelSample> samples) {
  config.validate();
  detail::ByteWriter w;
  w.magic("CSID");
  w.u16(kDatasetVersion);
  w.u16(config.n_h);
  w.u16(config.n_v);
  w.u16(config.n_r);
  w.u16(config.k_subbands);
  w.u16(config.n_gran);
  w.f64(config.subcarrier_spacing);
  w.f64(config.carrier_freq);
  w.u32(static_cast<std::uint32_t>(samples.size()));
  for (const ChannelSample& s : samples) {
    if (!(s.config == config))
      throw ContractError("encode_dataset: samples must share one SystemConfig");
    if (s.subbands.size() != config.k_subbands)
      throw ContractError("encode_dataset: wrong subband count");
    for (const ComplexMatrix& h : s.subbands) {
      if (h.rows() != config.n_r || h.cols() != config.n_t())
        throw ContractError("encode_dataset: wrong subband shape");
      for (const cplx& x : h.data()) {
        w.f32(static_cast<float>(x.real()));
        w.f32(static_cast<float>(x.imag()));
      }
    }
  }
  return std::move(w.bytes());
}

std::pair<SystemConfig, std::vector<ChannelSample>> decode_dataset(
    std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "CSID dataset");
  r.expect_magic("CSID");
  const std::size_t version_at = r.offset();
  if (const auto version = r.u16(); version != kDatasetVersion)
    throw FormatError("CSID dataset: unsupported version " + std::to_string(version),
                      version_at);
  SystemConfig config;
  config.n_h = r.u16();
  config.n_v = r.u16();
  config.n_r = r.u16();
  config.k_subbands = r.u16();
  config.n_gran = r.u16();
  config.subcarrier_spacing = r.f64();
  config.carrier_freq = r.f64();
  const std::size_t header_end = r.offset();
  try {
    config.validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("CSID dataset: invalid header: ") + e.what(), header_end);
  }
  const std::uint32_t count = r.u32();

  const std::size_t per_sample =
      std::size_t{config.k_subbands} * config.n_r * config.n_t() * 8;
  if (r.remaining() / per_sample < count)
    throw FormatError("CSID dataset: truncated, header declares " + std::to_string(count) +
                          " samples",
                      r.offset());

  std::vector<ChannelSample> samples;
  samples.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    ChannelSample s{config, {}};
    s.subbands.reserve(config.k_subbands);
    for (std::size_t k = 0; k < config.k_subbands; ++k) {
      ComplexMatrix h(config.n_r, config.n_t());
      for (cplx& x : h.data()) {
        const float re = r.f32();
        const float im = r.f32();
        x = cplx(re, im);
      }
      if (!h.all_finite())
        throw FormatError("CSID dataset: non-finite entry", r.offset());
      s.subbands.push_back(std::move(h));
    }
    samples.push_back(std::move(s));
  }
  r.expect_end();
  return {config, std::move(samples)};
}

void write_dataset(const fs::path& path, const SystemConfig& config,
                   std::span<const ChannelSample> samples) {
  detail::write_file(path, encode_dataset(config, samples));
}

void write_dataset(const fs::path& path, std::span<const ChannelSample> samples) {
  const SystemConfig config = samples.empty() ? SystemConfig{} : samples.front().config;
  write_dataset(path, config, samples);
}

std::vector<ChannelSample> read_dataset(const fs::path& path) {
  const auto bytes = detail::read_file(path);
  return decode_dataset(bytes).second;
}

// ---------------------------------------------------------------------------
// Dataset directory

void write_dataset_dir(const fs::path& dir, const SystemConfig& config,
                       std::span<const EnvironmentData> envs) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  json manifest;
  manifest["format"] = "csid-set";
  manifest["version"] = 1;
  manifest["environments"] = json::array();
  for (const EnvironmentData& env : envs) {
    const std::string name = env_file_name(env.env_id);
    write_dataset(dir / name, config, env.samples);
    manifest["environments"].push_back(
        {{"env_id", env.env_id}, {"file", name}, {"samples", env.samples.size()}});
  }
  detail::write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::pair<SystemConfig, std::vector<EnvironmentData>> read_dataset_dir(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(detail::read_text_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest.json: ") + e.what(), 0);
  }
  std::vector<EnvironmentData> envs;
  std::optional<SystemConfig> config;
  try {
    for (const auto& entry : manifest.at("environments")) {
      EnvironmentData env;
      env.env_id = entry.at("env_id").get<std::int32_t>();
      auto [cfg, samples] = decode_dataset(detail::read_file(dir / entry.at("file").get<std::string>()));
      if (config && !(*config == cfg))
        throw FormatError("dataset directory: environments disagree on SystemConfig", 0);
      config = cfg;
      env.samples = std::move(samples);
      envs.push_back(std::move(env));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest.json: ") + e.what(), 0);
  }
  return {config.value_or(SystemConfig{}), std::move(envs)};
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json to_json(const SystemConfig& c) {
  return {{"n_h", c.n_h},
          {"n_v", c.n_v},
          {"n_r", c.n_r},
          {"k_subbands", c.k_subbands},
          {"n_gran", c.n_gran},
          {"subcarrier_spacing", c.subcarrier_spacing},
          {"carrier_freq", c.carrier_freq}};
}

json to_json(const EnvironmentProfile& p) {
  return {{"env_id", p.env_id},
          {"num_paths", p.num_paths},
          {"los", p.los},
          {"rician_k_db", p.rician_k_db},
          {"mean_azimuth", p.mean_azimuth},
          {"mean_zenith", p.mean_zenith},
          {"angle_spread", p.angle_spread},
          {"delay_spread", p.delay_spread},
          {"max_delay", p.max_delay},
          {"seed", p.seed}};
}

json parse_json_file(const fs::path& path) {
  try {
    return json::parse(detail::read_text_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what(), e.byte);
  }
}

}  // namespace

SystemConfig load_system_config(const fs::path& path) {
  const json j = parse_json_file(path);
  SystemConfig c;
  try {
    c.n_h = j.value("n_h", c.n_h);
    c.n_v = j.value("n_v", c.n_v);
    c.n_r = j.value("n_r", c.n_r);
    c.k_subbands = j.value("k_subbands", c.k_subbands);
    c.n_gran = j.value("n_gran", c.n_gran);
    c.subcarrier_spacing = j.value("subcarrier_spacing", c.subcarrier_spacing);
    c.carrier_freq = j.value("carrier_freq", c.carrier_freq);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what(), 0);
  }
  c.validate();
  return c;
}

void save_system_config(const fs::path& path, const SystemConfig& config) {
  detail::write_text_file(path, to_json(config).dump(2) + "\n");
}

std::vector<EnvironmentProfile> load_profiles(const fs::path& path) {
  const json j = parse_json_file(path);
  std::vector<EnvironmentProfile> out;
  try {
    for (const auto& e : j.at("profiles")) {
      EnvironmentProfile p;
      p.env_id = e.at("env_id").get<std::int32_t>();
      p.num_paths = e.at("num_paths").get<std::uint32_t>();
      p.los = e.at("los").get<bool>();
      p.rician_k_db = e.at("rician_k_db").get<double>();
      p.mean_azimuth = e.at("mean_azimuth").get<double>();
      p.mean_zenith = e.at("mean_zenith").get<double>();
      p.angle_spread = e.at("angle_spread").get<double>();
      p.delay_spread = e.at("delay_spread").get<double>();
      p.max_delay = e.at("max_delay").get<double>();
      p.seed = e.at("seed").get<std::uint64_t>();
      p.validate();
      out.push_back(p);
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what(), 0);
  }
  return out;
}

void save_profiles(const fs::path& path, std::span<const EnvironmentProfile> profiles) {
  json j;
  j["profiles"] = json::array();
  for (const auto& p : profiles) j["profiles"].push_back(to_json(p));
  detail::write_text_file(path, j.dump(2) + "\n");
}

}  // namespace csifb
