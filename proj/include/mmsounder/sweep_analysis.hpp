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

#include "mmsounder/channel_model.hpp"
#include "mmsounder/pdp_pipeline.hpp"
#include "mmsounder/sliding_rx.hpp"

#include <cstdint>
#include <stop_token>
#include <string>
#include <vector>

namespace mmsounder {

/// All PDPs taken at one RX azimuth.
struct DirectionalRecord {
    double rx_azimuth = 0.0;              // deg, on the step grid
    std::vector<PowerDelayProfile> pdps;  // one per sweep
    double best_power = kAbsentPowerDbm;  // dBm, max total_power over sweeps

    bool has_signal() const { return best_power > kAbsentPowerDbm; }
};

struct SweepSet {
    std::vector<DirectionalRecord> records; // measurement order
    std::string rx_location;
    double tx_pointing_az = 0.0, tx_pointing_el = 0.0;
    double rx_elevation = 0.0;
    double step_deg = 15.0;
    int sweeps = 0;
    double distance_m = 0.0; // 3D T-R separation
    LinkLabel label = LinkLabel::LOS;
    std::string group;
    std::string warning;

    std::size_t pdp_count() const;
};

struct SweepOptions {
    double step_deg = 15.0;
    int sweeps = 5;
    int acquisitions = 20;           // PDPs averaged per angle
    std::uint64_t seed = 1;
    CorrelatorConfig correlator = CorrelatorConfig::desk();
    bool add_noise = true;
    /// false reuses the same noise realizations in every sweep, so a
    /// drift-free run gives identical PDPs per angle.
    bool independent_sweep_noise = true;
    /// RX elevation in degrees; NaN points at the TX elevation.
    double rx_elevation_deg = kUnset;
    DriftModel drift;
    double capture_gap = 0.0;        // s between successive angle captures
    bool align = false;              // align_acquisitions within each sweep
    bool start_at_best_angle = true; // rotate records so the strongest beam is first
    std::stop_token stop;
};

/// Azimuth sweep at rx[rx_index]: per angle and sweep, the channel seen
/// through the RX horn is correlated `acquisitions` times with fresh noise,
/// averaged and thresholded. Throws ConfigError unless 360 / step is whole
/// and sweeps >= 1.
SweepSet run_sweep(const ScenarioConfig& sc, std::size_t rx_index, const SweepOptions& opt);
SweepSet run_sweep(const ScenarioConfig& sc, std::size_t rx_index, double step_deg, int sweeps,
                   std::uint64_t seed);

/// Deterministic sub-seed for the given index path.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

/// Linear sum of best_power over angles with signal, in dBm. Throws
/// AnalysisError when no angle has signal.
double omni_power(const SweepSet& ss);

/// tx_power + tx_gain + rx_gain - omni.
double path_loss(double omni_dbm, double tx_power_dbm, double tx_gain_dbi, double rx_gain_dbi);

double eirp(double tx_power_dbm, double tx_gain_dbi);

struct PathLossPoint {
    double distance_m = 0.0;
    double path_loss_db = 0.0;
};

/// Close-in model PL(d) = FSPL(d0) + 10 n log10(d / d0).
struct CiFit {
    double ple = 0.0;
    double sigma = 0.0; // dB
    double d0 = 1.0;    // m
    double frequency = 0.0;
    std::size_t point_count = 0;

    double predict(double distance_m) const;
};

/// Least squares for n with d0 = 1 m. Throws AnalysisError for fewer than two
/// points, distances not above d0, or all distances equal.
CiFit ci_fit(const std::vector<PathLossPoint>& points, double frequency_hz);

/// Sample standard deviation (n - 1) of dB values. Throws AnalysisError for
/// fewer than two values.
double local_power_std(const std::vector<double>& powers_dbm);

struct RoutePoint {
    double position_m = 0.0;
    double omni_dbm = 0.0;
};

struct FadingRate {
    double db_per_m = 0.0;
    double db_per_s = 0.0;
    std::size_t first = 0, last = 0; // segment bounds in the route
};

/// Rate over the contiguous strictly decreasing run with the largest total
/// drop, as a positive dB/m. Zero when power never decreases. Throws
/// AnalysisError unless positions increase.
FadingRate fading_rate(const std::vector<RoutePoint>& route, double speed_mps);

struct LinkBudget {
    double tx_power = 14.6;       // dBm
    double tx_gain = 27.0;        // dBi
    double rx_gain = 27.0;        // dBi
    double processing_gain = 0.0; // dB
    double averaging_gain = 0.0;  // dB
    double noise_floor = 0.0;     // dBm
    double snr_threshold = 5.0;   // dB
};

/// thermal_psd + noise_figure + 10 log10(bandwidth), in dBm.
double thermal_noise_floor_dbm(double bandwidth_hz, double noise_figure_db,
                               double thermal_psd_dbm_hz = -174.0);

/// tx_power + tx_gain + rx_gain + processing_gain + averaging_gain
/// - (noise_floor + snr_threshold).
double max_measurable_path_loss(const LinkBudget& lb);

struct AngularSample {
    double azimuth_deg = 0.0;
    double power_dbm = kAbsentPowerDbm; // kAbsentPowerDbm when no signal
};

/// best_power per angle in ascending azimuth.
std::vector<AngularSample> angular_spectrum(const SweepSet& ss);

} // namespace mmsounder
