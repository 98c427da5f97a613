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

#include "mmsounder/sliding_rx.hpp"
#include "mmsounder/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numeric>
#include <string>

namespace mmsounder {

namespace {

// Integer bookkeeping shared by both correlators.
struct Timing {
    std::int64_t slide;      // gamma
    std::int64_t decimation; // input samples per compressed sample
    Eigen::Index period;     // input samples per code period
    Eigen::Index dilated;    // input samples per dilated period
    Eigen::Index outputs;    // compressed samples per dilated period
};

Timing make_timing(const CorrelatorConfig& cfg, const ChipSequence& pn)
{
    cfg.validate();
    if (pn.length() != cfg.code_length)
        throw ConfigError("PN length " + std::to_string(pn.length()) + " != code_length " +
                          std::to_string(cfg.code_length));
    const double gamma = slide_factor(cfg);
    const double gamma_int = std::round(gamma);
    if (std::abs(gamma - gamma_int) > 1e-9 * gamma)
        throw ConfigError("correlators need an integral slide factor, got " + std::to_string(gamma));
    Timing t{};
    t.slide = static_cast<std::int64_t>(gamma_int);
    const std::int64_t num = cfg.samples_per_chip * t.slide;
    if (num % cfg.compressed_samples_per_chip != 0)
        throw ConfigError("samples_per_chip * slide_factor must be a multiple of "
                          "compressed_samples_per_chip");
    t.decimation = num / cfg.compressed_samples_per_chip;
    t.period = cfg.code_length * cfg.samples_per_chip;
    t.dilated = t.period * t.slide;
    t.outputs = cfg.code_length * cfg.compressed_samples_per_chip;
    return t;
}

DilatedCir make_cir(const CorrelatorConfig& cfg, const Eigen::VectorXcd& y)
{
    DilatedCir cir;
    cir.set_iq(y);
    cir.compressed_sample_rate = cfg.compressed_sample_rate();
    cir.compressed_bandwidth = cfg.chip_offset();
    cir.slide_factor = slide_factor(cfg);
    cir.dilated_period = dilated_period(cfg);
    cir.tx_chip_rate = cfg.tx_chip_rate;
    return cir;
}

void check_input(const SampledWaveform& w, const CorrelatorConfig& cfg, Eigen::Index needed)
{
    if (std::abs(w.sample_rate - cfg.input_sample_rate()) > 1e-9 * cfg.input_sample_rate())
        throw ConfigError("received waveform sample rate does not match the correlator");
    if (w.size() - w.trigger_index < needed)
        throw SimulationError("received waveform has " + std::to_string(w.size() - w.trigger_index) +
                              " samples after the trigger, correlator needs " +
                              std::to_string(needed));
}

} // namespace

void CorrelatorConfig::validate() const
{
    if (!(tx_chip_rate > 0.0) || !(rx_chip_rate > 0.0))
        throw ConfigError("chip rates must be positive");
    if (!(rx_chip_rate < tx_chip_rate))
        throw ConfigError("RX chip rate must be slower than the TX chip rate");
    if (code_length < 1)
        throw ConfigError("code length must be positive");
    if (!(lpf_cutoff >= 2.0 * chip_offset()))
        throw ConfigError("post-mixer lowpass cutoff must be at least twice the chip-rate offset");
    if (samples_per_chip < 2)
        throw ConfigError("samples_per_chip must be >= 2");
    if (compressed_samples_per_chip < 2)
        throw ConfigError("compressed_samples_per_chip must be >= 2");
}

CorrelatorConfig CorrelatorConfig::full()
{
    CorrelatorConfig c;
    c.tx_chip_rate = 500e6;
    c.rx_chip_rate = rx_chip_rate_from_divider(1999.75e6, 4);
    c.code_length = 2047;
    c.lpf_cutoff = 4.0 * c.chip_offset();
    return c;
}

CorrelatorConfig CorrelatorConfig::desk()
{
    CorrelatorConfig c;
    c.tx_chip_rate = 1e6;
    c.rx_chip_rate = 0.9921875e6;
    c.code_length = 127;
    c.lpf_cutoff = 4.0 * c.chip_offset();
    return c;
}

double slide_factor(const CorrelatorConfig& cfg)
{
    const double offset = cfg.chip_offset();
    if (!(offset > 0.0))
        throw ConfigError("slide factor undefined: TX and RX chip rates must differ (tx > rx)");
    return cfg.tx_chip_rate / offset;
}

double dilated_period(const CorrelatorConfig& cfg)
{
    const double offset = cfg.chip_offset();
    if (!(offset > 0.0))
        throw ConfigError("dilated period undefined: TX and RX chip rates must differ (tx > rx)");
    return static_cast<double>(cfg.code_length) / offset;
}

double processing_gain_db(double slide)
{
    if (!(slide > 1.0))
        throw ConfigError("processing gain needs slide factor > 1");
    return 10.0 * std::log10(slide);
}

double rx_chip_rate_from_divider(double synth_freq_hz, int divider)
{
    if (divider < 1)
        throw ConfigError("clock divider must be >= 1");
    return synth_freq_hz / divider;
}

Eigen::VectorXcd DilatedCir::iq() const
{
    Eigen::VectorXcd v(i_channel.size());
    v.real() = i_channel;
    v.imag() = q_channel;
    return v;
}

void DilatedCir::set_iq(const Eigen::VectorXcd& v)
{
    i_channel = v.real();
    q_channel = v.imag();
}

DilatedCir correlate_literal(const SampledWaveform& rx_wave, const CorrelatorConfig& cfg,
                             const ChipSequence& pn, const CorrelationControl& control)
{
    const Timing t = make_timing(cfg, pn);
    check_input(rx_wave, cfg, t.dilated);

    // Mixer: received samples times the local code clocked at the RX chip
    // rate. Sample n is taken at mid-sample time n + 1/2, like the ZOH
    // received chips.
    const long double chips_per_sample =
        static_cast<long double>(cfg.rx_chip_rate) / static_cast<long double>(cfg.input_sample_rate());
    Eigen::VectorXcd product(t.dilated);
    for (Eigen::Index n = 0; n < t.dilated; ++n) {
        const auto chip = static_cast<std::int64_t>(
            std::floor((static_cast<long double>(n) + 0.5L) * chips_per_sample));
        product(n) = rx_wave.samples(rx_wave.trigger_index + n) * pn.chips(chip % cfg.code_length);
    }

    // The noiseless product repeats every dilated period, so the lowpass is
    // evaluated cyclically and only at the decimated instants.
    const Eigen::VectorXd taps = design_lowpass(cfg.lpf_cutoff, cfg.input_sample_rate());
    const Eigen::Index half = (taps.size() - 1) / 2;
    Eigen::VectorXcd y(t.outputs);
    for (Eigen::Index m = 0; m < t.outputs; ++m) {
        if ((m & 255) == 0) {
            if (control.stop.stop_requested())
                throw SimulationError("literal correlation cancelled");
            if (control.progress)
                control.progress(static_cast<double>(m) / static_cast<double>(t.outputs));
        }
        std::complex<double> acc = 0.0;
        const Eigen::Index centre = m * t.decimation + half;
        for (Eigen::Index j = 0; j < taps.size(); ++j) {
            Eigen::Index k = (centre - j) % t.dilated;
            if (k < 0)
                k += t.dilated;
            acc += taps(j) * product(k);
        }
        y(m) = acc;
    }
    if (control.progress)
        control.progress(1.0);
    return make_cir(cfg, y);
}

CorrelatorPlan::CorrelatorPlan(const CorrelatorConfig& cfg, const ChipSequence& pn) : cfg_(cfg)
{
    const Timing t = make_timing(cfg, pn);
    slide_ = static_cast<double>(t.slide);
    period_samples_ = t.period;
    output_size_ = t.outputs;

    Eigen::VectorXcd tmpl(t.period);
    for (Eigen::Index c = 0; c < cfg.code_length; ++c)
        tmpl.segment(c * cfg.samples_per_chip, cfg.samples_per_chip).setConstant(pn.chips(c));
    Eigen::FFT<double> fft;
    Eigen::VectorXcd spectrum(t.period);
    fft.fwd(spectrum, tmpl);
    template_spectrum_conj_ = spectrum.conjugate() / static_cast<double>(t.period);

    // Literal input sample n sees the local code late by (n + 1/2) / gamma
    // input samples, which on the sample grid acts as the nearest whole lag.
    // Output m filters samples m*D + half - j, so each tap lands on one lag.
    // The pattern repeats every `pattern` outputs with a whole-lag step.
    const Eigen::VectorXd taps = design_lowpass(cfg.lpf_cutoff, cfg.input_sample_rate());
    const std::int64_t half = (taps.size() - 1) / 2;
    const std::int64_t pattern = t.slide / std::gcd(t.decimation, t.slide);
    lag_step_ = static_cast<Eigen::Index>(pattern * t.decimation / t.slide);
    auto lag_of = [&](std::int64_t n) {
        // floor((n + 1/2) / gamma + 1/2) in integers
        const std::int64_t num = 2 * n + 1 + t.slide;
        const std::int64_t den = 2 * t.slide;
        return num >= 0 ? num / den : -((-num + den - 1) / den);
    };
    rows_.resize(static_cast<std::size_t>(pattern));
    for (std::int64_t m = 0; m < pattern; ++m) {
        const std::int64_t lo = lag_of(m * t.decimation + half - (taps.size() - 1));
        const std::int64_t hi = lag_of(m * t.decimation + half);
        Row& row = rows_[static_cast<std::size_t>(m)];
        row.start = static_cast<Eigen::Index>(lo);
        row.weights = Eigen::VectorXd::Zero(hi - lo + 1);
        for (Eigen::Index j = 0; j < taps.size(); ++j)
            row.weights(lag_of(m * t.decimation + half - j) - lo) += taps(j);
    }
}

Eigen::VectorXcd CorrelatorPlan::lag_correlation(const Eigen::VectorXcd& period) const
{
    if (period.size() != period_samples_)
        throw SimulationError("fast correlator expects exactly one code period of samples");
    Eigen::FFT<double> fft;
    Eigen::VectorXcd spectrum(period_samples_);
    fft.fwd(spectrum, period);
    spectrum.array() *= template_spectrum_conj_.array();
    Eigen::VectorXcd lags(period_samples_);
    fft.inv(lags, spectrum);
    return lags;
}

DilatedCir CorrelatorPlan::correlate_period(const Eigen::VectorXcd& period) const
{
    const Eigen::VectorXcd lags = lag_correlation(period);
    const Eigen::Index n_lags = lags.size();
    const auto pattern = static_cast<Eigen::Index>(rows_.size());

    Eigen::VectorXcd y(output_size_);
    for (Eigen::Index m = 0; m < output_size_; ++m) {
        const Row& row = rows_[static_cast<std::size_t>(m % pattern)];
        Eigen::Index k = (row.start + (m / pattern) * lag_step_) % n_lags;
        if (k < 0)
            k += n_lags;
        std::complex<double> acc = 0.0;
        for (Eigen::Index i = 0; i < row.weights.size(); ++i) {
            acc += row.weights(i) * lags(k);
            if (++k == n_lags)
                k = 0;
        }
        y(m) = acc;
    }
    return make_cir(cfg_, y);
}

DilatedCir CorrelatorPlan::correlate(const SampledWaveform& rx_wave) const
{
    check_input(rx_wave, cfg_, period_samples_);
    return correlate_period(rx_wave.samples.segment(rx_wave.trigger_index, period_samples_));
}

DilatedCir correlate_fast(const SampledWaveform& rx_wave, const CorrelatorConfig& cfg,
                          const ChipSequence& pn)
{
    return CorrelatorPlan(cfg, pn).correlate(rx_wave);
}

} // namespace mmsounder
