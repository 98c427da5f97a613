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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace mmsounder;
using Catch::Approx;

namespace {

// Fresnel integrals by composite Simpson rule.
std::pair<double, double> fresnel_cs(double x)
{
    const int n = 20000;
    const double h = x / n;
    double c = 0.0, s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        c += w * std::cos(std::numbers::pi * t * t / 2.0);
        s += w * std::sin(std::numbers::pi * t * t / 2.0);
    }
    return {c * h / 3.0, s * h / 3.0};
}

// Exact single knife-edge loss from the Fresnel integrals.
double fresnel_knife_edge_db(double nu)
{
    const auto [c, s] = fresnel_cs(nu);
    const double e = 0.5 * ((0.5 - c) * (0.5 - c) + (0.5 - s) * (0.5 - s));
    return -10.0 * std::log10(e);
}

ScenarioConfig open_field(const Eigen::Vector3d& tx, const Eigen::Vector3d& rx)
{
    ScenarioConfig sc;
    sc.tx_position = tx;
    sc.rx.push_back({"R", rx, LinkLabel::LOS, ""});
    return sc;
}

SampledWaveform test_wave(int order = 7, double chip_rate = 500e6)
{
    return upsample_chips(generate_msequence(msequence_preset(order)), chip_rate, 4, 1);
}

MultipathChannel one_path(double delay, double gain, double phase)
{
    MultipathChannel ch;
    PathComponent p;
    p.delay = delay;
    p.gain = gain;
    p.phase = phase;
    ch.paths.push_back(p);
    return ch;
}

} // namespace

TEST_CASE("free-space path loss")
{
    CHECK(fspl_db(1.0, 73.5e9) == Approx(69.8).margin(0.05));
    CHECK(fspl_db(10.0, 73.5e9) - fspl_db(1.0, 73.5e9) == Approx(20.0).margin(1e-12));
    CHECK(fspl_db(1.0, 147e9) - fspl_db(1.0, 73.5e9) == Approx(6.0206).margin(1e-4));
    CHECK_THROWS_AS(fspl_db(0.0, 73.5e9), ConfigError);
}

TEST_CASE("horn pattern")
{
    const AntennaPattern tx = AntennaPattern::tx_horn();
    CHECK(pattern_gain(tx, 0.0, 0.0) == 27.0);
    CHECK(pattern_gain(tx, 3.5, 0.0) == Approx(24.0));
    CHECK(pattern_gain(tx, 90.0, 0.0) == Approx(-3.0));
    CHECK(pattern_gain(tx, 359.0, 0.0) == pattern_gain(tx, 1.0, 0.0));
    double prev = pattern_gain(tx, 0.0, 0.0);
    for (double d = 0.5; d <= 180.0; d += 0.5) {
        const double g = pattern_gain(tx, d, 0.0);
        REQUIRE(g <= prev);
        prev = g;
    }
    AntennaPattern bad = tx;
    bad.hpbw_az = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("knife-edge loss tracks the Fresnel integral")
{
    for (double nu = -0.7; nu <= 3.0; nu += 0.1) {
        INFO("nu " << nu);
        CHECK(knife_edge_loss_db(nu) == Approx(fresnel_knife_edge_db(nu)).margin(0.5));
    }
    CHECK(knife_edge_loss_db(0.0) == Approx(6.02).margin(0.1));
    CHECK(knife_edge_loss_db(-1.0) == 0.0);
}

TEST_CASE("unobstructed link at 30 m")
{
    const double horiz = std::sqrt(30.0 * 30.0 - 2.5 * 2.5);
    const ScenarioConfig sc = open_field({0, 0, 4}, {horiz, 0, 1.5});
    const MultipathChannel ch = synthesize_channel(sc, 0);
    REQUIRE(ch.paths.size() == 1);
    CHECK(ch.paths[0].kind == PathKind::Direct);
    CHECK(ch.paths[0].delay * 1e9 == Approx(100.07).margin(0.01));
    CHECK(20.0 * std::log10(ch.paths[0].gain) == Approx(-fspl_db(30.0, 73.5e9)).margin(1e-9));
    CHECK(ch.paths[0].aod_az == Approx(90.0));
    CHECK(ch.paths[0].aoa_az == Approx(270.0));
    CHECK(ch.warning.empty());
}

TEST_CASE("specular reflection adds the wall loss")
{
    ScenarioConfig sc = open_field({-12, 0, 2}, {12, 0, 2});
    sc.walls.push_back({"w", {-50, 16}, {50, 16}, true, 6.0});
    const MultipathChannel ch = synthesize_channel(sc, 0);
    REQUIRE(ch.paths.size() == 2);
    const PathComponent& r = ch.paths[1];
    CHECK(r.kind == PathKind::Reflection);
    CHECK(r.delay * kSpeedOfLight == Approx(40.0));
    CHECK(20.0 * std::log10(r.gain) == Approx(-(fspl_db(40.0, 73.5e9) + 6.0)).margin(1e-9));
}

TEST_CASE("diffraction behind a wedge")
{
    // Edge 0.3427 m off the blocked line between terminals 20 m either side:
    // nu = h sqrt(2 (d1 + d2) / (lambda d1 d2)) is about 2.4.
    const double lambda = kSpeedOfLight / 73.5e9;
    const double h = 0.3427;
    ScenarioConfig sc = open_field({-20, -h, 2}, {20, -h, 2});
    sc.walls.push_back({"screen", {0, 0}, {0, -100}, false, 0.0});
    sc.wedges.push_back({"edge", {0, 0}});
    const MultipathChannel ch = synthesize_channel(sc, 0);
    REQUIRE(ch.paths.size() == 1);
    const PathComponent& p = ch.paths[0];
    CHECK(p.kind == PathKind::Diffraction);

    const double d1 = std::hypot(20.0, h), d2 = d1;
    const double nu = h * std::sqrt(2.0 * (d1 + d2) / (lambda * d1 * d2));
    CHECK(nu == Approx(2.4).margin(0.01));
    const double loss = -20.0 * std::log10(p.gain) - fspl_db(d1 + d2, 73.5e9);
    CHECK(loss == Approx(fresnel_knife_edge_db(nu)).margin(0.5));
    CHECK(loss > 20.0);
}

TEST_CASE("fully enclosed receiver has no path")
{
    ScenarioConfig sc = open_field({0, 0, 4}, {10, 0, 1.5});
    sc.walls.push_back({"w", {5, -100}, {5, 100}, false, 0.0});
    const MultipathChannel ch = synthesize_channel(sc, 0);
    CHECK(ch.empty());
    CHECK_FALSE(ch.warning.empty());
    CHECK(synthesize_channel(sc, 0).paths.size() == ch.paths.size());
}

TEST_CASE("apply_channel identity, delay and cancellation")
{
    const SampledWaveform w = test_wave();
    const AntennaPattern iso = AntennaPattern::isotropic();

    const SampledWaveform same = apply_channel(w, one_path(0.0, 1.0, 0.0), iso, iso, kNoNoise, 1);
    CHECK((same.samples - w.samples).cwiseAbs().maxCoeff() < 1e-15);

    const SampledWaveform late = propagate(w, one_path(100e-9, 1.0, 0.0), iso, iso);
    for (Eigen::Index i = 0; i < w.size(); ++i)
        REQUIRE(late.samples((i + 200) % w.size()) == w.samples(i));

    MultipathChannel pair = one_path(10e-9, 0.5, 0.0);
    pair.paths.push_back(pair.paths[0]);
    pair.paths[1].phase = kPi;
    CHECK(propagate(w, pair, iso, iso).samples.cwiseAbs().maxCoeff() < 1e-12);

    const double period_s = static_cast<double>(w.period_samples) / w.sample_rate;
    CHECK_THROWS_AS(propagate(w, one_path(period_s, 1.0, 0.0), iso, iso), SimulationError);
}

TEST_CASE("received energy scales with gain and patterns")
{
    const SampledWaveform w = test_wave();
    MultipathChannel ch = one_path(3e-9, 1e-3, 0.7);
    ch.paths[0].aod_az = 2.0;
    ch.paths[0].aoa_az = 5.0;
    const AntennaPattern tx = AntennaPattern::tx_horn(), rx = AntennaPattern::rx_horn();
    const SampledWaveform y = propagate(w, ch, tx, rx);
    const double g = 1e-3 * std::pow(10.0, (pattern_gain(tx, 2.0, 0.0) + pattern_gain(rx, 5.0, 0.0)) / 20.0);
    CHECK(y.samples.squaredNorm() == Approx(w.samples.squaredNorm() * g * g).epsilon(1e-12));

    // additivity over paths
    MultipathChannel a = one_path(3e-9, 0.2, 0.1), b = one_path(7e-9, 0.4, -1.0), both = a;
    both.paths.push_back(b.paths[0]);
    const AntennaPattern iso = AntennaPattern::isotropic();
    const Eigen::VectorXcd sum = propagate(w, a, iso, iso).samples + propagate(w, b, iso, iso).samples;
    CHECK((propagate(w, both, iso, iso).samples - sum).norm() < 1e-12);
}

TEST_CASE("noise power follows the PSD")
{
    SampledWaveform w = test_wave(11, 1e6);
    w.samples.setZero();
    const double psd = -100.0; // dBm/Hz, over 4 MHz -> 4e-4 mW
    add_noise(w, psd, 99);
    const double measured = w.samples.squaredNorm() / static_cast<double>(w.size());
    CHECK(measured == Approx(std::pow(10.0, psd / 10.0) * w.sample_rate).epsilon(0.05));

    SampledWaveform again = test_wave(11, 1e6);
    again.samples.setZero();
    add_noise(again, psd, 99);
    CHECK(again.samples == w.samples);
}

TEST_CASE("bearings are compass angles")
{
    CHECK(bearing_deg({0, 0}, {0, 1}) == Approx(0.0));
    CHECK(bearing_deg({0, 0}, {1, 0}) == Approx(90.0));
    CHECK(bearing_deg({0, 0}, {0, -1}) == Approx(180.0));
    CHECK(bearing_deg({0, 0}, {-1, 0}) == Approx(270.0));
}
