/**
 * @file channelgen.hpp
 * @brief Synthetic multi-environment channel generator and the CSID dataset
 * format.
 *
 * A channel sample holds K subband matrices H_k (N_r x N_t) built from a
 * geometric multipath model
 *
 *   H_k = sum_p g_p a_r(p) a_t(p)^H exp(-j 2 pi f_k tau_p),
 *   f_k = k * n_gran * subcarrier_spacing   (k = 0 .. K-1).
 *
 * a_t is the N_h x N_v half-wavelength UPA response, a_r a half-wavelength
 * ULA at the UE. Each environment is a parameter set (mean angles, spreads,
 * delay statistics, path count) standing in for one propagation map.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "csifb/numkit.hpp"

namespace csifb {

struct SystemConfig {
  std::uint16_t n_h = 8;
  std::uint16_t n_v = 4;
  std::uint16_t n_r = 4;
  std::uint16_t k_subbands = 13;
  std::uint16_t n_gran = 48;
  double subcarrier_spacing = 15e3;  ///< Hz
  double carrier_freq = 2.6e9;       ///< Hz

  std::size_t n_t() const { return std::size_t{n_h} * n_v; }
  /// Throws ContractError on zero dimensions or non-positive frequencies.
  void validate() const;

  friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

struct EnvironmentProfile {
  std::int32_t env_id = 0;
  std::uint32_t num_paths = 1;
  bool los = true;
  double rician_k_db = 6.0;
  double mean_azimuth = 0.0;  ///< rad
  double mean_zenith = 1.5707963267948966;  ///< rad, pi/2 is the horizon
  double angle_spread = 0.1;  ///< rad
  double delay_spread = 100e-9;  ///< s
  double max_delay = 1e-6;  ///< s
  std::uint64_t seed = 0;

  void validate() const;
};

struct ChannelSample {
  SystemConfig config;
  std::vector<ComplexMatrix> subbands;  ///< K matrices, N_r x N_t

  friend bool operator==(const ChannelSample&, const ChannelSample&) = default;
};

/// One propagation path of the geometric model.
struct Path {
  cplx gain;
  double delay = 0.0;    ///< s
  double azimuth = 0.0;  ///< departure, rad
  double zenith = 0.0;   ///< departure, rad
  double arrival = 0.0;  ///< arrival angle at the UE ULA, rad
};

/// UPA response, entry (h, v) at index h * n_v + v:
/// exp(j pi (h sin(zenith) sin(azimuth) + v cos(zenith))).
ComplexVector steering_vector(const SystemConfig& config, double azimuth,
                              double zenith);

/// Half-wavelength ULA response of the UE array.
ComplexVector receive_steering_vector(std::size_t n_r, double angle);

/// Random path draw for (profile.seed, sample_index). Path powers sum to one.
std::vector<Path> draw_paths(const EnvironmentProfile& profile,
                             std::uint64_t sample_index);

/// Evaluates the multipath sum for an explicit path list.
ChannelSample synthesize(const SystemConfig& config, std::span<const Path> paths);

ChannelSample generate_sample(const SystemConfig& config,
                              const EnvironmentProfile& profile,
                              std::uint64_t sample_index);

/// Rounds every entry to f32 precision, the precision CSID files store.
void round_to_storage(ChannelSample& sample);

/// Samples [first, first + count) of one environment at storage precision,
/// so in-memory experiments see exactly what a CSID round trip would give.
/// OpenMP-parallel.
std::vector<ChannelSample> generate_environment(const SystemConfig& config,
                                                const EnvironmentProfile& profile,
                                                std::size_t count,
                                                std::uint64_t first = 0);
/// Single-threaded reference for generate_environment.
std::vector<ChannelSample> generate_environment_serial(
    const SystemConfig& config, const EnvironmentProfile& profile,
    std::size_t count, std::uint64_t first = 0);

/// Six environments; the first four are meant for training, the last two
/// have angle/delay statistics none of the first four share.
std::vector<EnvironmentProfile> default_profiles();

/// Re-keys a profile's seed with a run seed; seed 0 leaves it unchanged.
EnvironmentProfile with_run_seed(EnvironmentProfile profile, std::uint64_t run_seed);

// --- CSID binary dataset ----------------------------------------------------

inline constexpr std::uint16_t kDatasetVersion = 1;

std::vector<std::uint8_t> encode_dataset(const SystemConfig& config,
                                         std::span<const ChannelSample> samples);
/// Throws FormatError with the byte offset on bad magic/version/truncation.
std::pair<SystemConfig, std::vector<ChannelSample>> decode_dataset(
    std::span<const std::uint8_t> bytes);

void write_dataset(const std::filesystem::path& path, const SystemConfig& config,
                   std::span<const ChannelSample> samples);
/// Convenience overload; all samples must share one config (empty -> default).
void write_dataset(const std::filesystem::path& path,
                   std::span<const ChannelSample> samples);
std::vector<ChannelSample> read_dataset(const std::filesystem::path& path);

// --- Multi-environment dataset directory ------------------------------------

struct EnvironmentData {
  std::int32_t env_id = 0;
  std::vector<ChannelSample> samples;
};

/// Writes one CSID file per environment plus manifest.json listing them in
/// order (the first c entries are the training environments).
void write_dataset_dir(const std::filesystem::path& dir, const SystemConfig& config,
                       std::span<const EnvironmentData> envs);
std::pair<SystemConfig, std::vector<EnvironmentData>> read_dataset_dir(
    const std::filesystem::path& dir);

// --- JSON --------------------------------------------------------------------

SystemConfig load_system_config(const std::filesystem::path& path);
void save_system_config(const std::filesystem::path& path, const SystemConfig& config);
std::vector<EnvironmentProfile> load_profiles(const std::filesystem::path& path);
void save_profiles(const std::filesystem::path& path,
                   std::span<const EnvironmentProfile> profiles);

}  // namespace csifb
