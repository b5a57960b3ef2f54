#pragma once

#include <cstdint>

namespace goanet::channel {

// Alpha-Beta-Gamma multi-frequency pathloss model:
//   PL(d, f) = 10 alpha log10(d / ref_distance) + offset_db
//            + 10 gamma log10(f / ref_freq)
// plus log-normal shadowing with standard deviation shadow_sigma_db.
// Defaults are editable configuration, not calibrated constants.
struct AbgParams {
  double path_exponent = 3.5;    // alpha
  double offset_db = 24.4;       // beta of the ABG model
  double freq_exponent = 1.9;    // gamma
  double shadow_sigma_db = 7.6;  // >= 0
  double ref_distance_m = 1.0;   // > 0
  double ref_freq_hz = 1e9;      // > 0
};

enum class Fading { none, rayleigh };

struct RadioConfig {
  double bandwidth_hz = 1e3;
  double noise_psd_w_per_hz = 3.981e-21;  // -174 dBm/Hz
  double max_tx_power_w = 0.1;
  double carrier_freq_hz = 1e9;
};

// One slot's flat-fading realization for a device link.
struct ChannelDraw {
  std::int64_t slot = 0;
  double gain = 0.0;       // linear power gain, >= 0
  double r_max_bps = 0.0;  // Shannon maximum rate at max transmit power
};

// Throws DomainError when distance < ref_distance.
double pathloss_db(double distance_m, double freq_hz, const AbgParams& p);

// R_max = B log2(1 + p_tx h / (N0 B)); 0 when h = 0.
double max_rate_bps(double gain, const RadioConfig& radio);

double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);

// Per-slot channel draw: h = 10^{-(PL + shadow)/10} * F with
// shadow ~ N(0, sigma_db^2) and F a unit-mean exponential power gain
// (Rayleigh envelope), both i.i.d. per slot. Pure function of
// (seed, device, slot); evaluation order never matters.
ChannelDraw sample_gain(std::uint64_t seed, std::uint64_t device,
                        std::int64_t slot, double distance_m,
                        const AbgParams& params, Fading fading,
                        const RadioConfig& radio);

}  // namespace goanet::channel
