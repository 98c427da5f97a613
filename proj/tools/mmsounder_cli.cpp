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

// mmsounder command line: pn, simulate, sweep, campaign, fit, budget, emit.

#include "mmsounder/csv.hpp"
#include "mmsounder/errors.hpp"
#include "mmsounder/pdp_pipeline.hpp"
#include "mmsounder/pn_core.hpp"
#include "mmsounder/scenario_io.hpp"
#include "mmsounder/sliding_rx.hpp"
#include "mmsounder/sweep_analysis.hpp"
#include "mmsounder/units.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>

namespace fs = std::filesystem;
using namespace mmsounder;

namespace {

struct Common {
    std::string scenario;
    std::string preset = "desk";
    std::uint64_t seed = 1;
    std::string out;
    double step_deg = 15.0;
    int sweeps = 5;
};

void print_progress(std::size_t done, std::size_t total)
{
    static std::mutex mu;
    std::lock_guard lock(mu);
    std::cerr << "\r" << done << "/" << total << " locations" << (done == total ? "\n" : "") << std::flush;
}

int cmd_pn(int order, int chips_per_cycle, const std::string& out)
{
    const LfsrSpec spec = msequence_preset(order);
    const ChipSequence seq = chips_per_cycle > 1 ? generate_leapforward(spec, chips_per_cycle)
                                                 : generate_msequence(spec);
    const auto ones = (seq.chips.array() > 0.0).count();
    std::cout << "order: " << order << "\ntaps:";
    for (int t : spec.feedback_taps)
        std::cout << ' ' << t;
    std::cout << "\nperiod: " << seq.length() << "\nones: " << ones << "\nzeros: " << seq.length() - ones
              << "\nautocorrelation lag0: " << periodic_autocorrelation(seq, 0)
              << "\nautocorrelation lag1: " << periodic_autocorrelation(seq, 1) << '\n';
    if (!out.empty()) {
        CsvTable t;
        t.header = {"index", "chip"};
        for (Eigen::Index i = 0; i < seq.length(); ++i)
            t.rows.push_back({std::to_string(i), seq.chips(i) > 0 ? "1" : "-1"});
        std::ofstream os(out, std::ios::binary);
        if (!os)
            throw ConfigError("cannot write " + out);
        write_csv(os, t);
    }
    return 0;
}

int cmd_simulate(const Common& c, std::size_t rx_index, double azimuth, bool binary)
{
    const ScenarioConfig sc = load_scenario(c.scenario);
    if (rx_index >= sc.rx.size())
        throw ConfigError("rx index out of range");
    const CorrelatorConfig cfg = preset_config(parse_preset(c.preset));
    const MultipathChannel ch = synthesize_channel(sc, rx_index);
    if (!ch.warning.empty())
        std::cerr << "warning: " << ch.warning << '\n';
    if (std::isnan(azimuth))
        azimuth = ch.empty() ? 0.0 : ch.paths.front().aoa_az;

    int order = 2;
    while ((Eigen::Index{1} << order) - 1 != cfg.code_length)
        ++order;
    const ChipSequence pn = generate_msequence(msequence_preset(order));
    const CorrelatorPlan plan(cfg, pn);
    SampledWaveform tx = upsample_chips(pn, cfg.tx_chip_rate, cfg.samples_per_chip, 1);
    tx.samples *= std::sqrt(db_to_linear(sc.tx_power_dbm));
    AntennaPattern rx_ant = sc.rx_antenna;
    rx_ant.pointing_az = azimuth;
    const RxSite& site = sc.rx[rx_index];
    const Eigen::Vector3d d = sc.tx_position - site.position;
    rx_ant.pointing_el = rad_to_deg(std::atan2(d.z(), d.head<2>().norm()));

    const SampledWaveform clean = propagate(tx, ch, sc.tx_antenna, rx_ant);
    std::vector<DilatedCir> cirs;
    SampledWaveform last;
    for (int q = 0; q < 20; ++q) {
        last = clean;
        add_noise(last, sc.noise.psd_dbm_hz(), derive_seed(c.seed, {rx_index, 0, 0, static_cast<std::uint64_t>(q)}));
        cirs.push_back(plan.correlate_period(last.samples));
    }
    PowerDelayProfile pdp = process_acquisitions(cirs, calibrate_pulse_energy(plan, pn));
    pdp.meta.angle_deg = azimuth;
    pdp.meta.location = site.id;
    pdp.meta.sweep = 0;

    std::cout << "rx: " << site.id << "\npaths: " << ch.paths.size() << "\nazimuth_deg: " << azimuth
              << "\npeak_dBm: " << pdp.peak_power << "\nnoise_floor_dBm: " << pdp.noise_floor
              << "\nthreshold_dBm: " << pdp.threshold << "\ntotal_dBm: " << pdp.total_power << '\n';
    if (!c.out.empty()) {
        const fs::path dir(c.out);
        fs::create_directories(dir);
        write_pdp_csv(pdp, dir / "pdp.csv");
        write_cir_csv(cirs.front(), dir / "cir.csv");
        if (binary)
            write_waveform_binary(last, dir / "rx_waveform.bin");
    }
    return 0;
}

void print_bundle(const ResultBundle& b)
{
    for (const auto& l : b.locations) {
        std::cout << l.rx_id << "  d=" << l.distance_m << " m  omni=" << l.omni_dbm << " dBm";
        if (l.path_loss_db)
            std::cout << "  PL=" << *l.path_loss_db << " dB";
        std::cout << "  " << (l.label == LinkLabel::LOS ? "LOS" : "NLOS") << '\n';
    }
    std::cout << fit_report(b);
}

CampaignSpec make_spec(const Common& c, CampaignKind kind)
{
    CampaignSpec s;
    s.scenario_path = c.scenario;
    s.kind = kind;
    s.step_deg = c.step_deg;
    s.sweeps = c.sweeps;
    s.preset = parse_preset(c.preset);
    s.output_dir = c.out;
    s.seed = c.seed;
    return s;
}

int cmd_fit(const std::string& input, double frequency)
{
    const CiFit f = ci_fit(read_path_loss_points(input), frequency);
    std::cout << "ple: " << f.ple << "\nsigma_db: " << f.sigma << "\npoint_count: " << f.point_count
              << "\nfrequency_hz: " << f.frequency << "\nd0_m: " << f.d0 << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sliding correlator channel sounder simulation"};
    app.require_subcommand(1);
    Common c;

    auto add_common = [&c](CLI::App* sub, bool scenario_required) {
        auto* opt = sub->add_option("--scenario", c.scenario, "Scenario YAML")->check(CLI::ExistingFile);
        if (scenario_required)
            opt->required();
        sub->add_option("--preset", c.preset, "Correlator preset")->check(CLI::IsMember({"full", "desk"}));
        sub->add_option("--seed", c.seed, "Random seed");
        sub->add_option("--out", c.out, "Output directory");
        sub->add_option("--step-deg", c.step_deg, "Azimuth step in degrees");
        sub->add_option("--sweeps", c.sweeps, "Sweeps per location");
    };

    int order = 11, chips_per_cycle = 1;
    std::string pn_out;
    auto* pn = app.add_subcommand("pn", "Generate and inspect an m-sequence");
    pn->add_option("--order", order, "LFSR order (3..24 with a preset)");
    pn->add_option("--chips-per-cycle", chips_per_cycle, "Leap-forward chips per clock");
    pn->add_option("--out", pn_out, "Write chips as CSV");

    std::size_t rx_index = 0;
    double azimuth = std::nan("");
    bool binary = false;
    auto* sim = app.add_subcommand("simulate", "Single link, one RX pointing");
    add_common(sim, true);
    sim->add_option("--rx-index", rx_index, "RX location index");
    sim->add_option("--azimuth", azimuth, "RX azimuth in degrees (default: first path)");
    sim->add_flag("--binary", binary, "Also write the received waveform as binary");

    auto* sweep = app.add_subcommand("sweep", "Azimuth sweeps at one RX");
    add_common(sweep, true);
    sweep->add_option("--rx-index", rx_index, "RX location index");

    std::string kind = "route";
    auto* camp = app.add_subcommand("campaign", "Route or cluster campaign");
    add_common(camp, true);
    camp->add_option("--kind", kind, "route or cluster")->check(CLI::IsMember({"route", "cluster"}));

    std::string fit_in;
    double frequency = 73.5e9;
    auto* fit = app.add_subcommand("fit", "CI path loss fit of a CSV (distance_m, path_loss_dB)");
    fit->add_option("--input", fit_in, "Input CSV")->required()->check(CLI::ExistingFile);
    fit->add_option("--frequency", frequency, "Carrier frequency in Hz");

    LinkBudget lb;
    lb.processing_gain = 39.0;
    lb.averaging_gain = 6.5;
    double bandwidth = 62.5e3, nf = 5.0;
    auto* budget = app.add_subcommand("budget", "Maximum measurable path loss");
    budget->add_option("--tx-power", lb.tx_power, "dBm");
    budget->add_option("--tx-gain", lb.tx_gain, "dBi");
    budget->add_option("--rx-gain", lb.rx_gain, "dBi");
    budget->add_option("--processing-gain", lb.processing_gain, "dB");
    budget->add_option("--averaging-gain", lb.averaging_gain, "dB");
    budget->add_option("--bandwidth", bandwidth, "Noise bandwidth in Hz");
    budget->add_option("--noise-figure", nf, "dB");
    budget->add_option("--snr", lb.snr_threshold, "Required SNR in dB");

    std::string bundle_dir, plot_kind = "pathloss";
    auto* emit = app.add_subcommand("emit", "Plot data from a campaign output directory");
    emit->add_option("--bundle", bundle_dir, "Campaign output directory")->required()->check(CLI::ExistingDirectory);
    emit->add_option("--kind", plot_kind, "pathloss, polar or route")
        ->check(CLI::IsMember({"pathloss", "polar", "route"}));
    emit->add_option("--out", c.out, "Output directory (default: bundle)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*pn)
            return cmd_pn(order, chips_per_cycle, pn_out);
        if (*sim)
            return cmd_simulate(c, rx_index, azimuth, binary);
        if (*sweep) {
            CampaignSpec s = make_spec(c, CampaignKind::Single);
            s.rx_index = rx_index;
            print_bundle(run_campaign(s));
            return 0;
        }
        if (*camp) {
            print_bundle(run_campaign(make_spec(c, parse_campaign_kind(kind)), print_progress));
            return 0;
        }
        if (*fit)
            return cmd_fit(fit_in, frequency);
        if (*budget) {
            lb.noise_floor = thermal_noise_floor_dbm(bandwidth, nf);
            std::cout << "noise_floor_dBm: " << lb.noise_floor
                      << "\nmax_path_loss_dB: " << max_measurable_path_loss(lb)
                      << "\neirp_dBm: " << eirp(lb.tx_power, lb.tx_gain) << '\n';
            return 0;
        }
        if (*emit) {
            const ResultBundle b = load_bundle(bundle_dir);
            for (const auto& p : emit_plot_data(b, parse_plot_kind(plot_kind), c.out.empty() ? bundle_dir : c.out))
                std::cout << p.string() << '\n';
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
