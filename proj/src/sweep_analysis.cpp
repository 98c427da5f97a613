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

#include "mmsounder/sweep_analysis.hpp"
#include "mmsounder/errors.hpp"
#include "mmsounder/units.hpp"
#include "mmsounder/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace mmsounder {

namespace {

int order_for_length(Eigen::Index code_length)
{
    for (int order = 2; order <= 24; ++order)
        if ((Eigen::Index{1} << order) - 1 == code_length)
            return order;
    throw ConfigError("code length " + std::to_string(code_length) + " is not 2^n - 1");
}

int angle_count(double step_deg)
{
    if (!(step_deg > 0.0) || step_deg > 360.0)
        throw ConfigError("azimuth step must be in (0, 360] degrees");
    const double n = 360.0 / step_deg;
    const double r = std::round(n);
    if (std::abs(n - r) > 1e-9 * n)
        throw ConfigError("360 is not a whole multiple of the azimuth step " + std::to_string(step_deg));
    return static_cast<int>(r);
}

} // namespace

std::size_t SweepSet::pdp_count() const
{
    std::size_t n = 0;
    for (const auto& r : records)
        n += r.pdps.size();
    return n;
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
{
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * path.size());
    auto push = [&words](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (std::uint64_t p : path)
        push(p);
    std::seed_seq seq(words.begin(), words.end());
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

SweepSet run_sweep(const ScenarioConfig& sc, std::size_t rx_index, const SweepOptions& opt)
{
    sc.validate();
    if (rx_index >= sc.rx.size())
        throw ConfigError("RX index " + std::to_string(rx_index) + " out of range");
    const int n_angles = angle_count(opt.step_deg);
    if (opt.sweeps < 1)
        throw ConfigError("sweeps must be >= 1");
    if (opt.acquisitions < 1)
        throw ConfigError("acquisitions must be >= 1");
    if (opt.capture_gap < 0.0)
        throw ConfigError("capture gap must be >= 0");

    const RxSite& site = sc.rx[rx_index];
    const CorrelatorConfig& cfg = opt.correlator;
    const ChipSequence pn = generate_msequence(msequence_preset(order_for_length(cfg.code_length)));
    const CorrelatorPlan plan(cfg, pn);
    const double kappa = calibrate_pulse_energy(plan, pn);

    SampledWaveform tx = upsample_chips(pn, cfg.tx_chip_rate, cfg.samples_per_chip, 1);
    tx.samples *= std::sqrt(db_to_linear(sc.tx_power_dbm));

    const MultipathChannel ch = synthesize_channel(sc, rx_index);
    const Eigen::Vector3d d = sc.tx_position - site.position;

    SweepSet ss;
    ss.rx_location = site.id;
    ss.tx_pointing_az = sc.tx_antenna.pointing_az;
    ss.tx_pointing_el = sc.tx_antenna.pointing_el;
    ss.rx_elevation = std::isnan(opt.rx_elevation_deg)
                          ? rad_to_deg(std::atan2(d.z(), d.head<2>().norm()))
                          : opt.rx_elevation_deg;
    ss.step_deg = opt.step_deg;
    ss.sweeps = opt.sweeps;
    ss.distance_m = d.norm();
    ss.label = site.label;
    ss.group = site.group;
    ss.warning = ch.warning;

    std::vector<SampledWaveform> received;
    received.reserve(static_cast<std::size_t>(n_angles));
    ss.records.resize(static_cast<std::size_t>(n_angles));
    for (int a = 0; a < n_angles; ++a) {
        AntennaPattern rx_ant = sc.rx_antenna;
        rx_ant.pointing_az = a * opt.step_deg;
        rx_ant.pointing_el = ss.rx_elevation;
        received.push_back(propagate(tx, ch, sc.tx_antenna, rx_ant));
        ss.records[static_cast<std::size_t>(a)].rx_azimuth = rx_ant.pointing_az;
    }

    const double psd = opt.add_noise ? sc.noise.psd_dbm_hz() : kNoNoise;
    const bool drifting = opt.drift.effective_offset() != 0.0;
    for (int s = 0; s < opt.sweeps; ++s) {
        std::vector<PowerDelayProfile> sweep_pdps;
        sweep_pdps.reserve(static_cast<std::size_t>(n_angles));
        for (int a = 0; a < n_angles; ++a) {
            if (opt.stop.stop_requested())
                throw SimulationError("sweep at " + site.id + " cancelled");
            std::vector<DilatedCir> cirs;
            cirs.reserve(static_cast<std::size_t>(opt.acquisitions));
            const std::uint64_t noise_sweep = opt.independent_sweep_noise ? static_cast<std::uint64_t>(s) : 0;
            for (int q = 0; q < opt.acquisitions; ++q) {
                SampledWaveform w = received[static_cast<std::size_t>(a)];
                add_noise(w, psd,
                          derive_seed(opt.seed, {rx_index, static_cast<std::uint64_t>(a), noise_sweep,
                                                 static_cast<std::uint64_t>(q)}));
                cirs.push_back(plan.correlate_period(w.samples));
            }
            if (drifting) {
                DriftModel dm = opt.drift;
                dm.time_since_sync += static_cast<double>(s * n_angles + a) * opt.capture_gap;
                cirs = apply_drift(cirs, dm, 0.0);
            }
            PowerDelayProfile pdp = process_acquisitions(cirs, kappa);
            pdp.meta.angle_deg = a * opt.step_deg;
            pdp.meta.location = site.id;
            pdp.meta.sweep = s;
            sweep_pdps.push_back(std::move(pdp));
        }
        if (opt.align)
            sweep_pdps = align_acquisitions(sweep_pdps).pdps;
        for (int a = 0; a < n_angles; ++a) {
            DirectionalRecord& rec = ss.records[static_cast<std::size_t>(a)];
            PowerDelayProfile& pdp = sweep_pdps[static_cast<std::size_t>(a)];
            if (pdp.has_signal())
                rec.best_power = std::max(rec.best_power, pdp.total_power);
            rec.pdps.push_back(std::move(pdp));
        }
    }

    if (opt.start_at_best_angle) {
        auto best = std::max_element(ss.records.begin(), ss.records.end(),
                                     [](const DirectionalRecord& x, const DirectionalRecord& y) {
                                         return x.best_power < y.best_power;
                                     });
        if (best != ss.records.end() && best->has_signal())
            std::rotate(ss.records.begin(), best, ss.records.end());
    }
    return ss;
}

SweepSet run_sweep(const ScenarioConfig& sc, std::size_t rx_index, double step_deg, int sweeps,
                   std::uint64_t seed)
{
    SweepOptions opt;
    opt.step_deg = step_deg;
    opt.sweeps = sweeps;
    opt.seed = seed;
    return run_sweep(sc, rx_index, opt);
}

double omni_power(const SweepSet& ss)
{
    double sum = 0.0;
    for (const auto& r : ss.records)
        if (r.has_signal())
            sum += db_to_linear(r.best_power);
    if (!(sum > 0.0))
        throw AnalysisError("no angle with detectable signal at " + ss.rx_location);
    return linear_to_db(sum);
}

double path_loss(double omni_dbm, double tx_power_dbm, double tx_gain_dbi, double rx_gain_dbi)
{
    return tx_power_dbm + tx_gain_dbi + rx_gain_dbi - omni_dbm;
}

double eirp(double tx_power_dbm, double tx_gain_dbi) { return tx_power_dbm + tx_gain_dbi; }

double CiFit::predict(double distance_m) const
{
    return fspl_db(d0, frequency) + 10.0 * ple * std::log10(distance_m / d0);
}

CiFit ci_fit(const std::vector<PathLossPoint>& points, double frequency_hz)
{
    if (points.size() < 2)
        throw AnalysisError("CI fit needs at least two points");
    if (!(frequency_hz > 0.0))
        throw AnalysisError("CI fit needs a positive frequency");
    CiFit fit;
    fit.frequency = frequency_hz;
    fit.point_count = points.size();
    const double ref = fspl_db(fit.d0, frequency_hz);

    double dmin = points.front().distance_m, dmax = dmin;
    double num = 0.0, den = 0.0;
    for (const auto& p : points) {
        if (!(p.distance_m > fit.d0))
            throw AnalysisError("CI fit distances must exceed d0 = 1 m");
        dmin = std::min(dmin, p.distance_m);
        dmax = std::max(dmax, p.distance_m);
        const double x = 10.0 * std::log10(p.distance_m / fit.d0);
        num += (p.path_loss_db - ref) * x;
        den += x * x;
    }
    if (dmax - dmin <= 1e-12 * dmax)
        throw AnalysisError("CI fit is ill-conditioned: all distances are equal");
    fit.ple = num / den;

    double ss = 0.0;
    for (const auto& p : points) {
        const double r = p.path_loss_db - fit.predict(p.distance_m);
        ss += r * r;
    }
    fit.sigma = std::sqrt(ss / static_cast<double>(points.size()));
    return fit;
}

double local_power_std(const std::vector<double>& powers_dbm)
{
    if (powers_dbm.size() < 2)
        throw AnalysisError("local power std needs at least two values");
    const Eigen::Map<const Eigen::VectorXd> v(powers_dbm.data(), static_cast<Eigen::Index>(powers_dbm.size()));
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

FadingRate fading_rate(const std::vector<RoutePoint>& route, double speed_mps)
{
    if (route.size() < 2)
        throw AnalysisError("fading rate needs at least two route points");
    for (std::size_t i = 1; i < route.size(); ++i)
        if (!(route[i].position_m > route[i - 1].position_m))
            throw AnalysisError("route positions must increase");

    FadingRate best;
    double best_drop = 0.0;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= route.size(); ++i) {
        const bool falling = i < route.size() && route[i].omni_dbm < route[i - 1].omni_dbm;
        if (falling)
            continue;
        const std::size_t end = i - 1;
        const double drop = route[start].omni_dbm - route[end].omni_dbm;
        if (end > start && drop > best_drop) {
            best_drop = drop;
            best.first = start;
            best.last = end;
        }
        start = i;
    }
    if (best_drop > 0.0)
        best.db_per_m = best_drop / (route[best.last].position_m - route[best.first].position_m);
    best.db_per_s = best.db_per_m * speed_mps;
    return best;
}

double thermal_noise_floor_dbm(double bandwidth_hz, double noise_figure_db, double thermal_psd_dbm_hz)
{
    if (!(bandwidth_hz > 0.0))
        throw ConfigError("noise bandwidth must be positive");
    return thermal_psd_dbm_hz + noise_figure_db + 10.0 * std::log10(bandwidth_hz);
}

double max_measurable_path_loss(const LinkBudget& lb)
{
    return lb.tx_power + lb.tx_gain + lb.rx_gain + lb.processing_gain + lb.averaging_gain -
           (lb.noise_floor + lb.snr_threshold);
}

std::vector<AngularSample> angular_spectrum(const SweepSet& ss)
{
    std::vector<AngularSample> out;
    out.reserve(ss.records.size());
    for (const auto& r : ss.records)
        out.push_back({r.rx_azimuth, r.has_signal() ? r.best_power : kAbsentPowerDbm});
    std::sort(out.begin(), out.end(),
              [](const AngularSample& a, const AngularSample& b) { return a.azimuth_deg < b.azimuth_deg; });
    return out;
}

} // namespace mmsounder
