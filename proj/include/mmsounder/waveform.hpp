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

#include <Eigen/Dense>

namespace mmsounder {

/// Complex baseband samples. Amplitudes are in sqrt(mW): |x|^2 is power in mW,
/// so a unit-amplitude chip stream is a 0 dBm signal.
struct SampledWaveform {
    Eigen::VectorXcd samples;
    double sample_rate = 0.0;      // Hz
    double chip_rate = 0.0;        // Hz
    Eigen::Index trigger_index = 0; // sample where a code period starts
    Eigen::Index period_samples = 0; // samples in one code period

    Eigen::Index size() const { return samples.size(); }
    double samples_per_chip() const { return sample_rate / chip_rate; }
};

/// Zero-order-hold chip shaping, `periods` repetitions, trigger at sample 0.
/// Throws ConfigError for samples_per_chip < 2 (aliasing) or periods < 1.
SampledWaveform upsample_chips(const ChipSequence& seq, double chip_rate, int samples_per_chip,
                               int periods);

/// Moves the trigger by increments * increment_duration, modulo one code
/// period. The shift has to land on whole samples.
SampledWaveform shift_trigger(const SampledWaveform& w, long increments, double increment_duration);

/// Windowed-sinc (Hamming) lowpass design with unit DC gain and odd length.
/// The passband edge is `cutoff`; the stopband starts at min(2*cutoff,
/// sample_rate/2) and the tap count is chosen for >= 40 dB there.
Eigen::VectorXd design_lowpass(double cutoff, double sample_rate);

/// Linear-phase FIR applied cyclically over the whole record with the group
/// delay removed, so y[n] lines up with x[n].
Eigen::VectorXcd filter_zero_phase(const Eigen::VectorXcd& x, const Eigen::VectorXd& taps);

/// Anti-alias lowpass. Throws ConfigError unless 0 < cutoff < sample_rate / 2.
SampledWaveform lowpass(const SampledWaveform& w, double cutoff);

} // namespace mmsounder
