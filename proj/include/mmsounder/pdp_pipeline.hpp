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

#include "mmsounder/sliding_rx.hpp"
#include "mmsounder/units.hpp"

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <vector>

namespace mmsounder {

inline constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct PdpMetadata {
    double angle_deg = kUnset; // RX azimuth
    std::string location;
    int sweep = -1;
    bool operator==(const PdpMetadata&) const = default;
};

/// Power versus de-dilated excess delay. Power levels are dBm; the power
/// vector is linear mW.
struct PowerDelayProfile {
    Eigen::VectorXd power;
    double delay_step = 0.0;   // s of true (de-dilated) delay per sample
    double noise_floor = kUnset;
    double threshold = kUnset;
    double peak_power = kUnset;
    double total_power = kUnset;
    /// Energy of a unit-power single path after correlation, used to turn
    /// sample sums into path power. 1 means raw sample sum.
    double pulse_energy = 1.0;
    PdpMetadata meta;

    Eigen::Index size() const { return power.size(); }
    Eigen::VectorXd excess_delay() const;
    /// True after thresholding when at least one sample survived.
    bool has_signal() const { return total_power > kAbsentPowerDbm; }
};

enum class TrainingState { Trained, FreeRunning };

/// Rubidium reference drift between TX and RX.
struct DriftModel {
    double fractional_frequency_offset = 0.0;
    TrainingState training_state = TrainingState::Trained;
    double time_since_sync = 0.0; // s

    /// Zero while trained.
    double effective_offset() const;
    /// True-time shift of acquisition k, (time_since_sync + k gap) * offset.
    double shift_at(Eigen::Index k, double gap) const;
};

/// power = I^2 + Q^2 on a delay axis of compressed spacing / slide factor.
PowerDelayProfile pdp_from_iq(const DilatedCir& cir);

/// Element-wise linear mean. Throws AnalysisError on an empty list or
/// mismatched lengths or delay axes.
PowerDelayProfile average_pdps(const std::vector<PowerDelayProfile>& pdps);

/// Median power of the trailing 10% of the delay axis, in dBm. Returns -inf
/// for a noiseless tail. Throws AnalysisError for fewer than 100 samples.
double estimate_noise_floor(const PowerDelayProfile& pdp);

/// threshold = max(peak - 20 dB, noise_floor + 5 dB); samples below it are
/// zeroed and total_power is the sum of the survivors divided by
/// pulse_energy. With no survivors total_power is kAbsentPowerDbm.
/// Throws AnalysisError when noise_floor is unset.
PowerDelayProfile threshold_pdp(const PowerDelayProfile& pdp, double peak_rule_db = 20.0,
                                double snr_rule_db = 5.0);

/// Time-shifts acquisition k by dm.shift_at(k, gap) of true delay, i.e.
/// shift * slide_factor * compressed_sample_rate compressed samples
/// (fractional shifts by FFT phase ramp, so each record stays coherent).
/// Throws ConfigError for a negative gap.
std::vector<DilatedCir> apply_drift(const std::vector<DilatedCir>& acquisitions, const DriftModel& dm,
                                    double inter_acquisition_gap);

struct AlignmentResult {
    std::vector<PowerDelayProfile> pdps;
    std::vector<Eigen::Index> shifts; // samples applied to each input (cyclic)
    Eigen::Index anchor = -1;         // index of the strongest acquisition
    bool skipped = false;
    std::string warning;
};

/// Cyclically shifts every acquisition with signal so its strongest sample
/// lands on the strongest sample of the globally strongest acquisition.
/// Signal-free inputs pass through unshifted; with no signal at all the set
/// is returned unchanged and `skipped` is set.
AlignmentResult align_acquisitions(const std::vector<PowerDelayProfile>& acquisitions);

/// Energy above (peak - peak_rule_db) of the correlator response to an
/// undistorted unit-power code, for PowerDelayProfile::pulse_energy.
double calibrate_pulse_energy(const CorrelatorPlan& plan, const ChipSequence& pn,
                              double peak_rule_db = 20.0);

/// pdp_from_iq on each CIR, average, noise floor, threshold.
PowerDelayProfile process_acquisitions(const std::vector<DilatedCir>& cirs, double pulse_energy);

} // namespace mmsounder
