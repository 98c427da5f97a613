// SPDX-License-Identifier: Apache-2.0
//
// mmsounder: sliding correlator channel sounder simulation and analysis
// Copyright (C) 2026 The mmsounder authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "mmsounder/waveform.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace mmsounder {

// Angles follow compass bearings: azimuth in degrees clockwise from +y
// (north), elevation positive above the horizon.

enum class PathKind { Direct, Reflection, Diffraction };

struct PathComponent {
    double delay = 0.0;  // s
    double gain = 0.0;   // linear amplitude, propagation and interaction losses
    double phase = 0.0;  // rad, carrier phase of the exact delay plus interaction phase
    double aod_az = 0.0, aod_el = 0.0;
    double aoa_az = 0.0, aoa_el = 0.0;
    PathKind kind = PathKind::Direct;
};

struct MultipathChannel {
    std::vector<PathComponent> paths; // sorted by delay
    double carrier_frequency = 0.0;
    std::string warning;              // set when no propagation path exists

    bool empty() const { return paths.empty(); }
};

/// Gaussian main lobe with a flat sidelobe floor.
struct AntennaPattern {
    double boresight_gain = 0.0; // dBi
    double hpbw_az = 0.0, hpbw_el = 0.0;
    double pointing_az = 0.0, pointing_el = 0.0;
    double sidelobe_floor = 30.0; // dB below boresight

    void validate() const;
    bool operator==(const AntennaPattern&) const = default;

    static AntennaPattern tx_horn() { return {27.0, 7.0, 7.0, 0.0, 0.0, 30.0}; }
    static AntennaPattern rx_horn() { return {20.0, 15.0, 15.0, 0.0, 0.0, 30.0}; }
    static AntennaPattern isotropic() { return {0.0, 179.0, 179.0, 0.0, 0.0, 0.0}; }
};

enum class LinkLabel { LOS, NLOS };

/// Vertical wall in plan view. Walls always block; reflective walls also
/// produce one specular bounce.
struct Wall {
    std::string name;
    Eigen::Vector2d a = Eigen::Vector2d::Zero();
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
    bool reflective = true;
    double reflection_loss_db = 6.0;
    bool operator==(const Wall&) const = default;
};

/// Vertical building edge used as a knife-edge diffractor.
struct Wedge {
    std::string name;
    Eigen::Vector2d edge = Eigen::Vector2d::Zero();
    bool operator==(const Wedge&) const = default;
};

struct RxSite {
    std::string id;
    Eigen::Vector3d position = Eigen::Vector3d::Zero(); // z is antenna height
    LinkLabel label = LinkLabel::LOS;
    std::string group;
    bool operator==(const RxSite&) const = default;
};

struct NoiseSpec {
    double thermal_psd_dbm_hz = -174.0;
    double noise_figure_db = 5.0;
    double psd_dbm_hz() const { return thermal_psd_dbm_hz + noise_figure_db; }
    bool operator==(const NoiseSpec&) const = default;
};

struct ScenarioConfig {
    std::string name;
    double carrier_frequency = 73.5e9;
    Eigen::Vector3d tx_position{0.0, 0.0, 4.0};
    double tx_power_dbm = 14.6;
    AntennaPattern tx_antenna = AntennaPattern::tx_horn();
    AntennaPattern rx_antenna = AntennaPattern::rx_horn(); // pointing_az is swept
    std::vector<Wall> walls;
    std::vector<Wedge> wedges;
    std::vector<RxSite> rx;
    NoiseSpec noise;

    void validate() const;
    bool operator==(const ScenarioConfig&) const = default;
};

/// Free-space path loss in dB, 20 log10(4 pi d f / c).
double fspl_db(double distance_m, double frequency_hz);

/// Pattern gain in dBi toward (az, el): G0 - 12[(daz/hpbw_az)^2 + (del/hpbw_el)^2],
/// floored at G0 - sidelobe_floor. Azimuth offsets wrap around.
double pattern_gain(const AntennaPattern& p, double az_deg, double el_deg);

/// Single knife-edge diffraction loss J(nu) in dB (ITU-R P.526 approximation,
/// zero for nu <= -0.78).
double knife_edge_loss_db(double nu);

/// Deterministic ray construction for TX -> rx[rx_index]: direct path when
/// unblocked, one specular bounce per reflective wall, and one knife-edge path
/// per wedge when the direct path is blocked.
MultipathChannel synthesize_channel(const ScenarioConfig& sc, std::size_t rx_index);

/// Noiseless propagation of a periodic waveform: sum over paths of
/// gain * G_tx * G_rx * exp(j phase) * w delayed (cyclically, nearest sample).
/// Throws SimulationError when any delay exceeds one code period.
SampledWaveform propagate(const SampledWaveform& w, const MultipathChannel& ch,
                          const AntennaPattern& tx, const AntennaPattern& rx);

/// Adds complex white Gaussian noise with the given PSD over the full
/// sample-rate bandwidth. A PSD of -inf adds nothing.
void add_noise(SampledWaveform& w, double noise_psd_dbm_hz, std::uint64_t seed);

SampledWaveform apply_channel(const SampledWaveform& w, const MultipathChannel& ch,
                              const AntennaPattern& tx, const AntennaPattern& rx,
                              double noise_psd_dbm_hz, std::uint64_t seed);

inline constexpr double kNoNoise = -std::numeric_limits<double>::infinity();

/// Compass bearing of `to` as seen from `from`, in [0, 360).
double bearing_deg(const Eigen::Vector2d& from, const Eigen::Vector2d& to);

} // namespace mmsounder
