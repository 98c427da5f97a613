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

#include "mmsounder/pdp_pipeline.hpp"
#include "mmsounder/errors.hpp"
#include "mmsounder/waveform.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

namespace mmsounder {

namespace {

double peak_dbm(const Eigen::VectorXd& p)
{
    return p.size() == 0 ? kAbsentPowerDbm : linear_to_db(p.maxCoeff());
}

Eigen::VectorXd cyclic_shift(const Eigen::VectorXd& v, Eigen::Index s)
{
    const Eigen::Index n = v.size();
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i)
        out(((i + s) % n + n) % n) = v(i);
    return out;
}

// Delays x by `shift` samples (cyclic, fractional allowed).
Eigen::VectorXcd fractional_shift(const Eigen::VectorXcd& x, double shift)
{
    const Eigen::Index n = x.size();
    Eigen::FFT<double> fft;
    Eigen::VectorXcd spec(n);
    fft.fwd(spec, x);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (2 * k == n) {
            spec(k) *= std::cos(kPi * shift);
            continue;
        }
        const double f = static_cast<double>(k <= n / 2 ? k : k - n) / static_cast<double>(n);
        spec(k) *= std::polar(1.0, -2.0 * kPi * f * shift);
    }
    Eigen::VectorXcd out(n);
    fft.inv(out, spec);
    return out;
}

} // namespace

Eigen::VectorXd PowerDelayProfile::excess_delay() const
{
    return Eigen::VectorXd::LinSpaced(power.size(), 0.0,
                                      delay_step * static_cast<double>(std::max<Eigen::Index>(power.size() - 1, 0)));
}

double DriftModel::effective_offset() const
{
    return training_state == TrainingState::Trained ? 0.0 : fractional_frequency_offset;
}

double DriftModel::shift_at(Eigen::Index k, double gap) const
{
    return (time_since_sync + static_cast<double>(k) * gap) * effective_offset();
}

PowerDelayProfile pdp_from_iq(const DilatedCir& cir)
{
    if (cir.i_channel.size() != cir.q_channel.size())
        throw AnalysisError("I and Q channels differ in length");
    if (!(cir.compressed_sample_rate > 0.0) || !(cir.slide_factor > 0.0))
        throw AnalysisError("CIR lacks a compressed sample rate or slide factor");
    PowerDelayProfile pdp;
    pdp.power = cir.i_channel.array().square() + cir.q_channel.array().square();
    pdp.delay_step = 1.0 / (cir.compressed_sample_rate * cir.slide_factor);
    pdp.peak_power = peak_dbm(pdp.power);
    return pdp;
}

PowerDelayProfile average_pdps(const std::vector<PowerDelayProfile>& pdps)
{
    if (pdps.empty())
        throw AnalysisError("no PDPs to average");
    PowerDelayProfile out = pdps.front();
    for (std::size_t i = 1; i < pdps.size(); ++i) {
        const PowerDelayProfile& p = pdps[i];
        if (p.size() != out.size())
            throw AnalysisError("PDP " + std::to_string(i) + " has " + std::to_string(p.size()) +
                                " samples, expected " + std::to_string(out.size()));
        if (std::abs(p.delay_step - out.delay_step) > 1e-12 * std::abs(out.delay_step))
            throw AnalysisError("PDP " + std::to_string(i) + " has a different delay axis");
        out.power += p.power;
    }
    out.power /= static_cast<double>(pdps.size());
    out.peak_power = peak_dbm(out.power);
    out.noise_floor = kUnset;
    out.threshold = kUnset;
    out.total_power = kUnset;
    return out;
}

double estimate_noise_floor(const PowerDelayProfile& pdp)
{
    const Eigen::Index n = pdp.size();
    if (n < 100)
        throw AnalysisError("noise floor estimate needs at least 100 samples, got " + std::to_string(n));
    const Eigen::Index tail = std::max<Eigen::Index>(n / 10, 1);
    std::vector<double> v(pdp.power.data() + (n - tail), pdp.power.data() + n);
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double median = *mid;
    if (v.size() % 2 == 0) {
        const double lower = *std::max_element(v.begin(), mid);
        median = 0.5 * (median + lower);
    }
    return linear_to_db(median);
}

PowerDelayProfile threshold_pdp(const PowerDelayProfile& pdp, double peak_rule_db, double snr_rule_db)
{
    if (std::isnan(pdp.noise_floor))
        throw AnalysisError("threshold_pdp needs a noise floor");
    if (!(pdp.pulse_energy > 0.0))
        throw AnalysisError("pulse energy must be positive");
    PowerDelayProfile out = pdp;
    out.peak_power = peak_dbm(pdp.power);
    out.threshold = std::max(out.peak_power - peak_rule_db, pdp.noise_floor + snr_rule_db);
    const double lin = db_to_linear(out.threshold);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        if (out.power(i) < lin || out.power(i) <= 0.0)
            out.power(i) = 0.0;
        else
            sum += out.power(i);
    }
    out.total_power = sum > 0.0 ? linear_to_db(sum / pdp.pulse_energy) : kAbsentPowerDbm;
    return out;
}

std::vector<DilatedCir> apply_drift(const std::vector<DilatedCir>& acquisitions, const DriftModel& dm,
                                    double inter_acquisition_gap)
{
    if (inter_acquisition_gap < 0.0)
        throw ConfigError("inter-acquisition gap must be >= 0");
    std::vector<DilatedCir> out;
    out.reserve(acquisitions.size());
    for (std::size_t k = 0; k < acquisitions.size(); ++k) {
        const DilatedCir& cir = acquisitions[k];
        const double true_shift = dm.shift_at(static_cast<Eigen::Index>(k), inter_acquisition_gap);
        DilatedCir shifted = cir;
        if (true_shift != 0.0 && cir.size() > 0) {
            const double samples = true_shift * cir.slide_factor * cir.compressed_sample_rate;
            shifted.set_iq(fractional_shift(cir.iq(), samples));
        }
        out.push_back(std::move(shifted));
    }
    return out;
}

AlignmentResult align_acquisitions(const std::vector<PowerDelayProfile>& acquisitions)
{
    AlignmentResult res;
    res.pdps = acquisitions;
    res.shifts.assign(acquisitions.size(), 0);

    auto detectable = [](const PowerDelayProfile& p) {
        if (p.size() == 0 || !(p.power.maxCoeff() > 0.0))
            return false;
        return std::isnan(p.threshold) || linear_to_db(p.power.maxCoeff()) >= p.threshold;
    };

    double best = -1.0;
    for (std::size_t i = 0; i < acquisitions.size(); ++i) {
        if (!detectable(acquisitions[i]))
            continue;
        const double m = acquisitions[i].power.maxCoeff();
        if (m > best) {
            best = m;
            res.anchor = static_cast<Eigen::Index>(i);
        }
    }
    if (res.anchor < 0) {
        res.skipped = true;
        if (!acquisitions.empty())
            res.warning = "alignment skipped: no acquisition above threshold";
        return res;
    }

    Eigen::Index anchor_bin = 0;
    acquisitions[static_cast<std::size_t>(res.anchor)].power.maxCoeff(&anchor_bin);
    for (std::size_t i = 0; i < acquisitions.size(); ++i) {
        if (!detectable(acquisitions[i]))
            continue;
        if (acquisitions[i].size() != acquisitions[static_cast<std::size_t>(res.anchor)].size())
            throw AnalysisError("acquisitions differ in length");
        Eigen::Index bin = 0;
        acquisitions[i].power.maxCoeff(&bin);
        const Eigen::Index s = anchor_bin - bin;
        res.shifts[i] = s;
        if (s != 0)
            res.pdps[i].power = cyclic_shift(acquisitions[i].power, s);
    }
    return res;
}

double calibrate_pulse_energy(const CorrelatorPlan& plan, const ChipSequence& pn, double peak_rule_db)
{
    const CorrelatorConfig& cfg = plan.config();
    const SampledWaveform w = upsample_chips(pn, cfg.tx_chip_rate, cfg.samples_per_chip, 1);
    const PowerDelayProfile pdp = pdp_from_iq(plan.correlate(w));
    const double cut = pdp.power.maxCoeff() * db_to_linear(-peak_rule_db);
    return (pdp.power.array() >= cut).select(pdp.power, 0.0).sum();
}

PowerDelayProfile process_acquisitions(const std::vector<DilatedCir>& cirs, double pulse_energy)
{
    std::vector<PowerDelayProfile> pdps;
    pdps.reserve(cirs.size());
    for (const DilatedCir& c : cirs)
        pdps.push_back(pdp_from_iq(c));
    PowerDelayProfile avg = average_pdps(pdps);
    avg.pulse_energy = pulse_energy;
    avg.noise_floor = estimate_noise_floor(avg);
    return threshold_pdp(avg);
}

} // namespace mmsounder
