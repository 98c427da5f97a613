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

#include "mmsounder/errors.hpp"
#include "mmsounder/pdp_pipeline.hpp"
#include "mmsounder/units.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace mmsounder;
using Catch::Approx;

namespace {

DilatedCir make_cir(const Eigen::VectorXd& i, const Eigen::VectorXd& q, double fs = 1000.0, double gamma = 10.0)
{
    DilatedCir c;
    c.i_channel = i;
    c.q_channel = q;
    c.compressed_sample_rate = fs;
    c.slide_factor = gamma;
    return c;
}

PowerDelayProfile flat(double dbm, Eigen::Index n = 200)
{
    PowerDelayProfile p;
    p.power = Eigen::VectorXd::Constant(n, db_to_linear(dbm));
    p.delay_step = 1e-9;
    return p;
}

// Complex Gaussian CIR with unit mean power per sample.
DilatedCir noise_cir(std::mt19937_64& rng, Eigen::Index n)
{
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    Eigen::VectorXd i(n), q(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        i(k) = g(rng);
        q(k) = g(rng);
    }
    return make_cir(i, q);
}

double stddev(const Eigen::VectorXd& v)
{
    return std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
}

} // namespace

TEST_CASE("pdp_from_iq squares and de-dilates")
{
    const PowerDelayProfile p = pdp_from_iq(make_cir(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)));
    CHECK(p.power == Eigen::Vector2d(1, 1));
    CHECK(p.delay_step == Approx(1.0 / 1000.0 / 10.0));
    CHECK(p.excess_delay()(1) == Approx(1e-4));
    CHECK(std::isnan(p.noise_floor));
    CHECK(std::isnan(p.threshold));

    const PowerDelayProfile z = pdp_from_iq(make_cir(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4)));
    CHECK(z.power.isZero());
}

TEST_CASE("average_pdps is an element-wise linear mean")
{
    PowerDelayProfile a = flat(0.0, 1), b = flat(0.0, 1);
    a.power(0) = 2.0;
    b.power(0) = 4.0;
    CHECK(average_pdps({a, b}).power(0) == 3.0);

    std::vector<PowerDelayProfile> same(20, flat(-70.0));
    CHECK(average_pdps(same).power.isApprox(same[0].power));

    PowerDelayProfile shorter = flat(0.0, 5), other_axis = flat(0.0, 200);
    other_axis.delay_step = 2e-9;
    CHECK_THROWS_AS(average_pdps({flat(0.0), shorter}), AnalysisError);
    CHECK_THROWS_AS(average_pdps({flat(0.0), other_axis}), AnalysisError);
    CHECK_THROWS_AS(average_pdps({}), AnalysisError);
}

TEST_CASE("20-fold averaging reduces the floor spread by about 6.5 dB")
{
    std::mt19937_64 rng(11);
    double ratio_db = 0.0, mean_shift_db = 0.0;
    const int sets = 20;
    for (int s = 0; s < sets; ++s) {
        std::vector<PowerDelayProfile> pdps;
        for (int k = 0; k < 20; ++k)
            pdps.push_back(pdp_from_iq(noise_cir(rng, 2000)));
        const PowerDelayProfile avg = average_pdps(pdps);
        ratio_db += 10.0 * std::log10(stddev(pdps[0].power) / stddev(avg.power));
        mean_shift_db += 10.0 * std::log10(avg.power.mean() / pdps[0].power.mean());
    }
    CHECK(ratio_db / sets == Approx(10.0 * std::log10(std::sqrt(20.0))).margin(1.0));
    CHECK(std::abs(mean_shift_db / sets) < 0.2);
}

TEST_CASE("noise floor from the trailing tenth")
{
    PowerDelayProfile p = flat(-100.0, 1000);
    p.power(5) = db_to_linear(-40.0);
    CHECK(estimate_noise_floor(p) == Approx(-100.0).margin(0.5));

    std::mt19937_64 rng(3);
    PowerDelayProfile n = pdp_from_iq(noise_cir(rng, 4000));
    const double f1 = estimate_noise_floor(n);
    n.power *= 2.0;
    CHECK(estimate_noise_floor(n) - f1 == Approx(3.0103).margin(1e-9));

    PowerDelayProfile silent = flat(0.0, 500);
    silent.power.setZero();
    CHECK(std::isinf(estimate_noise_floor(silent)));
    CHECK_THROWS_AS(estimate_noise_floor(flat(0.0, 99)), AnalysisError);
}

TEST_CASE("threshold rule binds on either criterion")
{
    PowerDelayProfile p = flat(-95.0, 200);
    p.power(10) = db_to_linear(-60.0);
    p.power(11) = db_to_linear(-75.0);
    p.power(12) = db_to_linear(-85.0);

    p.noise_floor = -90.0;
    PowerDelayProfile a = threshold_pdp(p);
    CHECK(a.threshold == Approx(-80.0));
    CHECK(a.power(12) == 0.0);
    CHECK(a.power(11) > 0.0);
    CHECK(a.total_power == Approx(linear_to_db(db_to_linear(-60.0) + db_to_linear(-75.0))));

    p.noise_floor = -70.0;
    PowerDelayProfile b = threshold_pdp(p);
    CHECK(b.threshold == Approx(-65.0));
    CHECK(b.power(11) == 0.0);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> peak(-120.0, -20.0), snr(-10.0, 60.0);
    for (int k = 0; k < 500; ++k) {
        PowerDelayProfile q = flat(-200.0, 100);
        const double pk = peak(rng);
        q.power(3) = db_to_linear(pk);
        q.noise_floor = pk - snr(rng);
        const PowerDelayProfile t = threshold_pdp(q);
        REQUIRE(t.threshold == Approx(std::max(pk - 20.0, q.noise_floor + 5.0)).margin(1e-9));
    }

    PowerDelayProfile weak = flat(-100.0, 200);
    weak.noise_floor = -100.0;
    const PowerDelayProfile none = threshold_pdp(weak);
    CHECK_FALSE(none.has_signal());
    CHECK(none.total_power == kAbsentPowerDbm);
    CHECK_THROWS_AS(threshold_pdp(flat(-100.0)), AnalysisError);
}

TEST_CASE("drift shifts acquisitions and alignment undoes it")
{
    DriftModel trained;
    trained.fractional_frequency_offset = 1e-10;
    CHECK(trained.effective_offset() == 0.0);

    DriftModel dm;
    dm.training_state = TrainingState::FreeRunning;
    dm.fractional_frequency_offset = 1e-10;
    CHECK(dm.shift_at(1, 120.0) - dm.shift_at(0, 120.0) == Approx(12e-9));

    // Compressed grid: 1 ns of true delay per sample (fs_c * gamma = 1 GHz).
    const Eigen::Index n = 512;
    Eigen::VectorXd i = Eigen::VectorXd::Zero(n), q = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = -8; k <= 8; ++k)
        i(40 + k) = 1.0 - std::abs(k) / 8.0;
    const DilatedCir base = make_cir(i, q, 1e6, 1000.0);

    std::vector<DilatedCir> same(4, base);
    const auto untouched = apply_drift(same, trained, 120.0);
    for (const auto& c : untouched)
        CHECK(c.i_channel == base.i_channel);

    const auto drifted = apply_drift(same, dm, 120.0);
    std::vector<PowerDelayProfile> pdps;
    for (std::size_t k = 0; k < drifted.size(); ++k) {
        // cross-correlation lag against the first acquisition
        const Eigen::VectorXcd a = drifted[0].iq(), b = drifted[k].iq();
        Eigen::Index best = 0;
        double best_v = -1.0;
        for (Eigen::Index lag = 0; lag < n; ++lag) {
            std::complex<double> acc = 0.0;
            for (Eigen::Index m = 0; m < n; ++m)
                acc += b((m + lag) % n) * std::conj(a(m));
            if (std::abs(acc) > best_v) {
                best_v = std::abs(acc);
                best = lag;
            }
        }
        CHECK(best == static_cast<Eigen::Index>(12 * k));
        pdps.push_back(pdp_from_iq(drifted[k]));
    }
    CHECK_THROWS_AS(apply_drift(same, dm, -1.0), ConfigError);

    const AlignmentResult al = align_acquisitions(pdps);
    REQUIRE_FALSE(al.skipped);
    Eigen::Index ref = 0;
    al.pdps[0].power.maxCoeff(&ref);
    for (const auto& p : al.pdps) {
        Eigen::Index at = 0;
        p.power.maxCoeff(&at);
        CHECK(std::abs(at - ref) <= 1);
    }
}

TEST_CASE("alignment degenerate cases")
{
    PowerDelayProfile one = flat(-90.0);
    one.power(7) = 1.0;
    const AlignmentResult single = align_acquisitions({one});
    CHECK(single.pdps[0].power == one.power);
    CHECK(single.shifts[0] == 0);

    PowerDelayProfile dark = flat(0.0);
    dark.power.setZero();
    const AlignmentResult none = align_acquisitions({dark, dark});
    CHECK(none.skipped);
    CHECK_FALSE(none.warning.empty());
    CHECK(none.pdps[1].power == dark.power);
}

TEST_CASE("pulse calibration turns a single path into its power")
{
    const CorrelatorConfig cfg = CorrelatorConfig::desk();
    const ChipSequence pn = generate_msequence(msequence_preset(7));
    const CorrelatorPlan plan(cfg, pn);
    const double kappa = calibrate_pulse_energy(plan, pn);
    CHECK(kappa > 1.0);

    SampledWaveform w = upsample_chips(pn, cfg.tx_chip_rate, cfg.samples_per_chip, 1);
    w.samples *= std::sqrt(db_to_linear(-50.0));
    std::vector<DilatedCir> cirs(20, plan.correlate(w));
    PowerDelayProfile p = process_acquisitions(cirs, kappa);
    CHECK(p.total_power == Approx(-50.0).margin(0.01));
    CHECK(p.noise_floor < p.peak_power - 30.0);
    CHECK(p.threshold == Approx(p.peak_power - 20.0));
}
