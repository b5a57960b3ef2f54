#include "goanet/channel.hpp"

#include <cmath>

#include "goanet/errors.hpp"
#include "goanet/rng.hpp"

namespace goanet::channel {

double pathloss_db(double distance_m, double freq_hz, const AbgParams& p) {
  if (!(p.ref_distance_m > 0.0) || !(p.ref_freq_hz > 0.0)) {
    throw ConfigError("ABG reference distance and frequency must be positive");
  }
  if (distance_m < p.ref_distance_m) {
    throw DomainError("distance below the ABG reference distance");
  }
  return 10.0 * p.path_exponent * std::log10(distance_m / p.ref_distance_m) +
         p.offset_db +
         10.0 * p.freq_exponent * std::log10(freq_hz / p.ref_freq_hz);
}

double max_rate_bps(double gain, const RadioConfig& radio) {
  if (gain < 0.0) throw DomainError("channel gain must be nonnegative");
  const double snr = radio.max_tx_power_w * gain /
                     (radio.noise_psd_w_per_hz * radio.bandwidth_hz);
  return radio.bandwidth_hz * std::log2(1.0 + snr);
}

double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

double watt_to_dbm(double watt) { return 10.0 * std::log10(watt * 1e3); }

ChannelDraw sample_gain(std::uint64_t seed, std::uint64_t device,
                        std::int64_t slot, double distance_m,
                        const AbgParams& params, Fading fading,
                        const RadioConfig& radio) {
  const double pl_db = pathloss_db(distance_m, radio.carrier_freq_hz, params);
  rng::Stream stream(seed, device, static_cast<std::uint64_t>(slot),
                     0x6368616eu /* "chan" */);
  // Fixed draw order so the stream layout does not depend on the flags.
  const double normal = stream.next_normal();
  const double expo = stream.next_exponential();
  const double shadow_db = params.shadow_sigma_db * normal;
  const double fade = (fading == Fading::rayleigh) ? expo : 1.0;
  const double gain = std::pow(10.0, -(pl_db + shadow_db) / 10.0) * fade;
  return ChannelDraw{slot, gain, max_rate_bps(gain, radio)};
}

}  // namespace goanet::channel
