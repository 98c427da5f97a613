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

#include "mmsounder/waveform.hpp"
#include "mmsounder/errors.hpp"
#include "mmsounder/units.hpp"

#include <cmath>

namespace mmsounder {

SampledWaveform upsample_chips(const ChipSequence& seq, double chip_rate, int samples_per_chip,
                               int periods)
{
    if (samples_per_chip < 2)
        throw ConfigError("samples_per_chip must be >= 2 to avoid aliasing the chip waveform");
    if (periods < 1)
        throw ConfigError("periods must be >= 1");
    if (!(chip_rate > 0.0))
        throw ConfigError("chip_rate must be positive");

    const Eigen::Index n = seq.length();
    const Eigen::Index period = n * samples_per_chip;

    SampledWaveform w;
    w.sample_rate = chip_rate * samples_per_chip;
    w.chip_rate = chip_rate;
    w.period_samples = period;
    w.samples.resize(period * periods);
    for (Eigen::Index c = 0; c < n; ++c)
        w.samples.segment(c * samples_per_chip, samples_per_chip).setConstant(seq.chips(c));
    for (int p = 1; p < periods; ++p)
        w.samples.segment(p * period, period) = w.samples.head(period);
    return w;
}

SampledWaveform shift_trigger(const SampledWaveform& w, long increments, double increment_duration)
{
    const double shift = static_cast<double>(increments) * increment_duration * w.sample_rate;
    const double rounded = std::round(shift);
    if (std::abs(shift - rounded) > 1e-6)
        throw ConfigError("trigger shift of " + std::to_string(shift) +
                          " samples is not a whole number of samples");
    if (w.period_samples <= 0)
        throw ConfigError("waveform has no code period");

    SampledWaveform out = w;
    const auto step = static_cast<Eigen::Index>(rounded) % w.period_samples;
    out.trigger_index = ((w.trigger_index + step) % w.period_samples + w.period_samples) %
                        w.period_samples;
    return out;
}

Eigen::VectorXd design_lowpass(double cutoff, double sample_rate)
{
    const double nyquist = sample_rate / 2.0;
    if (!(cutoff > 0.0) || !(cutoff < nyquist))
        throw ConfigError("lowpass cutoff must lie in (0, sample_rate/2)");

    const double stop_edge = std::min(2.0 * cutoff, nyquist);
    const double width = stop_edge - cutoff;
    const double mid = 0.5 * (cutoff + stop_edge) / sample_rate; // cycles/sample

    // Hamming main-lobe width is about 3.3/N; 4/N leaves margin at the edge.
    auto length = static_cast<Eigen::Index>(std::ceil(4.0 * sample_rate / width));
    length |= 1;
    length = std::max<Eigen::Index>(length, 3);

    Eigen::VectorXd taps(length);
    const double centre = static_cast<double>(length - 1) / 2.0;
    for (Eigen::Index i = 0; i < length; ++i) {
        const double m = static_cast<double>(i) - centre;
        const double sinc = (m == 0.0) ? 2.0 * mid : std::sin(2.0 * kPi * mid * m) / (kPi * m);
        const double window = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                                     static_cast<double>(length - 1));
        taps(i) = sinc * window;
    }
    taps /= taps.sum();
    return taps;
}

Eigen::VectorXcd filter_zero_phase(const Eigen::VectorXcd& x, const Eigen::VectorXd& taps)
{
    const Eigen::Index n = x.size();
    const Eigen::Index len = taps.size();
    const Eigen::Index half = (len - 1) / 2;
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(n);
    if (n == 0)
        return y;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::complex<double> acc = 0.0;
        for (Eigen::Index j = 0; j < len; ++j) {
            Eigen::Index k = (i + half - j) % n;
            if (k < 0)
                k += n;
            acc += taps(j) * x(k);
        }
        y(i) = acc;
    }
    return y;
}

SampledWaveform lowpass(const SampledWaveform& w, double cutoff)
{
    SampledWaveform out = w;
    out.samples = filter_zero_phase(w.samples, design_lowpass(cutoff, w.sample_rate));
    return out;
}

} // namespace mmsounder
