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

#include "mmsounder/pn_core.hpp"
#include "mmsounder/waveform.hpp"

#include <Eigen/Dense>

#include <functional>
#include <stop_token>
#include <vector>

namespace mmsounder {

struct CorrelatorConfig {
    double tx_chip_rate = 0.0; // Hz
    double rx_chip_rate = 0.0; // Hz, slightly slower than TX
    Eigen::Index code_length = 0;
    double lpf_cutoff = 0.0;   // Hz, post-mixer lowpass
    int samples_per_chip = 4;  // RX digitizer rate relative to the TX chip rate
    int compressed_samples_per_chip = 16; // output samples per dilated chip

    double chip_offset() const { return tx_chip_rate - rx_chip_rate; }
    double input_sample_rate() const { return tx_chip_rate * samples_per_chip; }
    double compressed_sample_rate() const { return compressed_samples_per_chip * chip_offset(); }

    /// Throws ConfigError unless 0 < rx < tx and lpf_cutoff >= 2 * offset.
    void validate() const;

    /// 500 Mcps / 499.9375 Mcps, 2047 chips, 4 samples per chip (2 GS/s).
    static CorrelatorConfig full();
    /// 1 Mcps / 0.9921875 Mcps, 127 chips: slide factor 128.
    static CorrelatorConfig desk();
};

/// tx / (tx - rx). Throws ConfigError on a zero or negative offset.
double slide_factor(const CorrelatorConfig& cfg);

/// code_length / (tx - rx), in seconds.
double dilated_period(const CorrelatorConfig& cfg);

/// 10 log10(slide_factor). Throws ConfigError unless slide_factor > 1.
double processing_gain_db(double slide_factor);

double rx_chip_rate_from_divider(double synth_freq_hz, int divider);

/// Time-dilated I/Q impulse response, one dilated period long.
struct DilatedCir {
    Eigen::VectorXd i_channel;
    Eigen::VectorXd q_channel;
    double compressed_sample_rate = 0.0; // Hz
    double compressed_bandwidth = 0.0;   // Hz, tx - rx chip rate
    double slide_factor = 0.0;
    double dilated_period = 0.0;         // s
    double tx_chip_rate = 0.0;

    Eigen::Index size() const { return i_channel.size(); }
    Eigen::VectorXcd iq() const;
    void set_iq(const Eigen::VectorXcd& v);
};

/// Cancellation and progress hooks for long literal runs.
struct CorrelationControl {
    std::stop_token stop;
    std::function<void(double)> progress; // fraction done, 0..1
};

/// Physical sliding correlator: multiply the received samples by the slower
/// local code, lowpass at cfg.lpf_cutoff and decimate to the compressed rate.
/// Needs one dilated period of input after the trigger; throws
/// SimulationError otherwise, or when cancelled through `control`.
DilatedCir correlate_literal(const SampledWaveform& rx_wave, const CorrelatorConfig& cfg,
                             const ChipSequence& pn, const CorrelationControl& control = {});

/// Precomputed state for the fast correlator.
///
/// One code period of input is cross-correlated cyclically with the TX chip
/// template (FFT). The lag axis is then mapped onto the dilated timebase and
/// passed through the same post-mixer FIR the literal path uses, so both
/// paths produce samples on the same compressed-time grid with the same
/// pulse shape. Input requirement: one code period after the trigger.
class CorrelatorPlan {
public:
    CorrelatorPlan(const CorrelatorConfig& cfg, const ChipSequence& pn);

    DilatedCir correlate(const SampledWaveform& rx_wave) const;

    /// Correlates exactly one code period of samples (already trigger aligned).
    DilatedCir correlate_period(const Eigen::VectorXcd& period) const;

    /// Cyclic cross-correlation of one period with the template, normalized
    /// so that an undistorted unit-amplitude code gives 1 at lag 0.
    Eigen::VectorXcd lag_correlation(const Eigen::VectorXcd& period) const;

    const CorrelatorConfig& config() const { return cfg_; }
    Eigen::Index output_size() const { return output_size_; }
    Eigen::Index period_samples() const { return period_samples_; }

private:
    struct Row {
        Eigen::Index start = 0;      // first lag sample (may be negative)
        Eigen::VectorXd weights;
    };

    CorrelatorConfig cfg_;
    double slide_ = 0.0;
    Eigen::Index period_samples_ = 0;
    Eigen::Index output_size_ = 0;
    Eigen::Index lag_step_ = 0; // lag advance after `rows_.size()` outputs
    Eigen::VectorXcd template_spectrum_conj_;
    std::vector<Row> rows_;
};

DilatedCir correlate_fast(const SampledWaveform& rx_wave, const CorrelatorConfig& cfg,
                          const ChipSequence& pn);

} // namespace mmsounder
