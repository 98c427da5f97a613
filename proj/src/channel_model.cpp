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

#include "mmsounder/channel_model.hpp"
#include "mmsounder/errors.hpp"
#include "mmsounder/units.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

namespace mmsounder {

namespace {

constexpr double kGeomEps = 1e-6; // m

double cross2(const Eigen::Vector2d& u, const Eigen::Vector2d& v)
{
    return u.x() * v.y() - u.y() * v.x();
}

// Intersection point of segments pq and ab, if they cross. Touching within
// kGeomEps of p or q does not count as crossing.
std::optional<Eigen::Vector2d> segment_crossing(const Eigen::Vector2d& p, const Eigen::Vector2d& q,
                                                const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    const Eigen::Vector2d r = q - p;
    const Eigen::Vector2d s = b - a;
    const double denom = cross2(r, s);
    if (std::abs(denom) < 1e-12)
        return std::nullopt; // parallel
    const double t = cross2(a - p, s) / denom;
    const double u = cross2(a - p, r) / denom;
    const double len = r.norm();
    const double t_eps = kGeomEps / std::max(len, kGeomEps);
    const double u_eps = kGeomEps / std::max(s.norm(), kGeomEps);
    if (t <= t_eps || t >= 1.0 - t_eps || u < -u_eps || u > 1.0 + u_eps)
        return std::nullopt;
    return p + t * r;
}

bool blocked(const ScenarioConfig& sc, const Eigen::Vector2d& p, const Eigen::Vector2d& q,
             const Wall* skip = nullptr)
{
    for (const auto& w : sc.walls) {
        if (&w == skip)
            continue;
        if (segment_crossing(p, q, w.a, w.b))
            return true;
    }
    return false;
}

double wrap_phase(double phi)
{
    double w = std::fmod(phi + kPi, 2.0 * kPi);
    if (w < 0.0)
        w += 2.0 * kPi;
    return w - kPi;
}

// Unfolded geometry: horizontal legs through the listed interaction points.
PathComponent make_path(const ScenarioConfig& sc, const Eigen::Vector3d& rx,
                        const std::vector<Eigen::Vector2d>& via, double extra_loss_db,
                        double extra_phase, PathKind kind)
{
    const Eigen::Vector2d tx2 = sc.tx_position.head<2>();
    const Eigen::Vector2d rx2 = rx.head<2>();

    double horizontal = 0.0;
    Eigen::Vector2d prev = tx2;
    for (const auto& v : via) {
        horizontal += (v - prev).norm();
        prev = v;
    }
    horizontal += (rx2 - prev).norm();

    const double dz = rx.z() - sc.tx_position.z();
    const double length = std::hypot(horizontal, dz);
    const Eigen::Vector2d first = via.empty() ? rx2 : via.front();
    const Eigen::Vector2d last = via.empty() ? tx2 : via.back();

    PathComponent pc;
    pc.kind = kind;
    pc.delay = length / kSpeedOfLight;
    pc.gain = std::pow(10.0, -(fspl_db(length, sc.carrier_frequency) + extra_loss_db) / 20.0);
    pc.phase = wrap_phase(extra_phase - 2.0 * kPi * sc.carrier_frequency * pc.delay);
    pc.aod_az = bearing_deg(tx2, first);
    pc.aod_el = rad_to_deg(std::atan2(dz, horizontal));
    pc.aoa_az = bearing_deg(rx2, last);
    pc.aoa_el = rad_to_deg(std::atan2(-dz, horizontal));
    return pc;
}

} // namespace

double bearing_deg(const Eigen::Vector2d& from, const Eigen::Vector2d& to)
{
    const Eigen::Vector2d d = to - from;
    return wrap_deg_360(rad_to_deg(std::atan2(d.x(), d.y())));
}

void AntennaPattern::validate() const
{
    if (!(hpbw_az > 0.0 && hpbw_az < 180.0) || !(hpbw_el > 0.0 && hpbw_el < 180.0))
        throw ConfigError("antenna HPBW must lie in (0, 180) degrees");
    if (sidelobe_floor < 0.0)
        throw ConfigError("antenna sidelobe floor must be non-negative");
    if (pointing_el < -90.0 || pointing_el > 90.0)
        throw ConfigError("antenna pointing elevation must lie in [-90, 90]");
}

void ScenarioConfig::validate() const
{
    if (!(carrier_frequency > 0.0))
        throw ConfigError("carrier frequency must be positive");
    if (!(tx_position.z() > 0.0))
        throw ConfigError("TX height must be positive");
    tx_antenna.validate();
    rx_antenna.validate();
    for (const auto& r : rx) {
        if (!(r.position.z() > 0.0))
            throw ConfigError("RX '" + r.id + "' height must be positive");
        if ((r.position - tx_position).norm() < kGeomEps)
            throw ConfigError("RX '" + r.id + "' coincides with the TX");
    }
    for (const auto& w : walls)
        if ((w.b - w.a).norm() < kGeomEps)
            throw ConfigError("wall '" + w.name + "' has zero length");
}

double fspl_db(double distance_m, double frequency_hz)
{
    if (!(distance_m > 0.0) || !(frequency_hz > 0.0))
        throw ConfigError("FSPL needs positive distance and frequency");
    return 20.0 * std::log10(4.0 * kPi * distance_m * frequency_hz / kSpeedOfLight);
}

double pattern_gain(const AntennaPattern& p, double az_deg, double el_deg)
{
    const double daz = wrap_deg_180(az_deg - p.pointing_az);
    const double del = el_deg - p.pointing_el;
    const double rolloff = 12.0 * ((daz / p.hpbw_az) * (daz / p.hpbw_az) +
                                   (del / p.hpbw_el) * (del / p.hpbw_el));
    return p.boresight_gain - std::min(rolloff, p.sidelobe_floor);
}

double knife_edge_loss_db(double nu)
{
    if (nu <= -0.78)
        return 0.0;
    const double t = nu - 0.1;
    return 6.9 + 20.0 * std::log10(std::sqrt(t * t + 1.0) + t);
}

MultipathChannel synthesize_channel(const ScenarioConfig& sc, std::size_t rx_index)
{
    if (rx_index >= sc.rx.size())
        throw ConfigError("RX index " + std::to_string(rx_index) + " out of range");

    const Eigen::Vector3d rx = sc.rx[rx_index].position;
    const Eigen::Vector2d tx2 = sc.tx_position.head<2>();
    const Eigen::Vector2d rx2 = rx.head<2>();
    const double wavelength = kSpeedOfLight / sc.carrier_frequency;

    MultipathChannel ch;
    ch.carrier_frequency = sc.carrier_frequency;

    const bool direct_blocked = blocked(sc, tx2, rx2);
    if (!direct_blocked)
        ch.paths.push_back(make_path(sc, rx, {}, 0.0, 0.0, PathKind::Direct));

    for (const auto& wall : sc.walls) {
        if (!wall.reflective)
            continue;
        const Eigen::Vector2d dir = (wall.b - wall.a).normalized();
        const Eigen::Vector2d normal(-dir.y(), dir.x());
        const double side_tx = normal.dot(tx2 - wall.a);
        const double side_rx = normal.dot(rx2 - wall.a);
        if (side_tx * side_rx <= 0.0 || std::abs(side_tx) < kGeomEps || std::abs(side_rx) < kGeomEps)
            continue;
        const Eigen::Vector2d image = tx2 - 2.0 * side_tx * normal;
        // Parameter along the wall where image->rx crosses the wall line.
        const double t_img = side_tx / (side_tx + side_rx);
        const Eigen::Vector2d hit = image + t_img * (rx2 - image);
        const double along = dir.dot(hit - wall.a);
        if (along <= kGeomEps || along >= (wall.b - wall.a).norm() - kGeomEps)
            continue;
        if (blocked(sc, tx2, hit, &wall) || blocked(sc, hit, rx2, &wall))
            continue;
        ch.paths.push_back(
            make_path(sc, rx, {hit}, wall.reflection_loss_db, kPi, PathKind::Reflection));
    }

    if (direct_blocked) {
        const Eigen::Vector2d los = rx2 - tx2;
        for (const auto& wedge : sc.wedges) {
            const Eigen::Vector2d e = wedge.edge;
            if (blocked(sc, tx2, e) || blocked(sc, e, rx2))
                continue;
            const double d1h = (e - tx2).norm();
            const double d2h = (rx2 - e).norm();
            if (d1h < kGeomEps || d2h < kGeomEps)
                continue;
            const double h = std::abs(cross2(los, e - tx2)) / los.norm();
            // Edge point height interpolated along the unfolded path.
            const double ze = sc.tx_position.z() + (rx.z() - sc.tx_position.z()) * d1h / (d1h + d2h);
            const double d1 = std::hypot(d1h, ze - sc.tx_position.z());
            const double d2 = std::hypot(d2h, rx.z() - ze);
            const double nu = h * std::sqrt(2.0 * (d1 + d2) / (wavelength * d1 * d2));
            ch.paths.push_back(make_path(sc, rx, {e}, knife_edge_loss_db(nu), -kPi / 4.0,
                                         PathKind::Diffraction));
        }
    }

    std::stable_sort(ch.paths.begin(), ch.paths.end(),
                     [](const PathComponent& a, const PathComponent& b) { return a.delay < b.delay; });
    if (ch.paths.empty())
        ch.warning = "no propagation path from TX to RX '" + sc.rx[rx_index].id + "'";
    return ch;
}

SampledWaveform propagate(const SampledWaveform& w, const MultipathChannel& ch,
                          const AntennaPattern& tx, const AntennaPattern& rx)
{
    const Eigen::Index n = w.size();
    if (w.period_samples <= 0 || n % w.period_samples != 0)
        throw ConfigError("waveform must hold a whole number of code periods");

    SampledWaveform out = w;
    out.samples.setZero();
    for (const auto& p : ch.paths) {
        const double shift_exact = p.delay * w.sample_rate;
        const auto shift = static_cast<Eigen::Index>(std::llround(shift_exact));
        if (shift >= w.period_samples)
            throw SimulationError("path delay " + std::to_string(p.delay * 1e9) +
                                  " ns exceeds one code period; delay would alias");
        const double g_db = pattern_gain(tx, p.aod_az, p.aod_el) + pattern_gain(rx, p.aoa_az, p.aoa_el);
        const std::complex<double> coeff =
            std::polar(p.gain * std::pow(10.0, g_db / 20.0), p.phase);
        // out[k] += coeff * w[k - shift], cyclic over the record
        out.samples.tail(n - shift) += coeff * w.samples.head(n - shift);
        if (shift > 0)
            out.samples.head(shift) += coeff * w.samples.tail(shift);
    }
    return out;
}

void add_noise(SampledWaveform& w, double noise_psd_dbm_hz, std::uint64_t seed)
{
    if (std::isinf(noise_psd_dbm_hz) && noise_psd_dbm_hz < 0.0)
        return;
    const double variance = std::pow(10.0, noise_psd_dbm_hz / 10.0) * w.sample_rate; // mW
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
    for (Eigen::Index i = 0; i < w.size(); ++i)
        w.samples(i) += std::complex<double>(normal(rng), normal(rng));
}

SampledWaveform apply_channel(const SampledWaveform& w, const MultipathChannel& ch,
                              const AntennaPattern& tx, const AntennaPattern& rx,
                              double noise_psd_dbm_hz, std::uint64_t seed)
{
    SampledWaveform out = propagate(w, ch, tx, rx);
    add_noise(out, noise_psd_dbm_hz, seed);
    return out;
}

} // namespace mmsounder
