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

#include "mmsounder/channel_model.hpp"
#include "mmsounder/pdp_pipeline.hpp"
#include "mmsounder/sliding_rx.hpp"
#include "mmsounder/sweep_analysis.hpp"
#include "mmsounder/waveform.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mmsounder {

/// Parses scenario YAML. `source` names the input in diagnostics. Throws
/// ConfigError with a line number on unknown keys, bad types or missing
/// required fields.
ScenarioConfig parse_scenario(std::string_view yaml, const std::string& source = "<string>");
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Canonical YAML with every field spelled out; parse_scenario inverts it.
std::string scenario_to_yaml(const ScenarioConfig& sc);
void write_scenario(const ScenarioConfig& sc, const std::filesystem::path& path);

enum class CampaignKind { Route, Cluster, Single };
enum class CorrelatorPreset { Full, Desk };

CampaignKind parse_campaign_kind(std::string_view s);
CorrelatorPreset parse_preset(std::string_view s);
std::string to_string(CampaignKind k);
std::string to_string(CorrelatorPreset p);
CorrelatorConfig preset_config(CorrelatorPreset p);

struct CampaignSpec {
    std::filesystem::path scenario_path;
    CampaignKind kind = CampaignKind::Route;
    double step_deg = 15.0;
    int sweeps = 5;
    int acquisitions = 20;
    CorrelatorPreset preset = CorrelatorPreset::Desk;
    std::filesystem::path output_dir; // empty: nothing written
    std::uint64_t seed = 1;
    std::size_t rx_index = 0;         // single campaigns only
    double speed_mps = 35.0;          // for the fading rate in dB/s
    std::size_t workers = 0;          // 0: hardware concurrency
    bool write_pdps = true;           // best-angle PDP per location
};

/// One row of the location table.
struct LocationResult {
    std::string rx_id;
    std::string group;
    LinkLabel label = LinkLabel::LOS;
    double position_m = 0.0;  // along the route, first RX at 0
    double distance_m = 0.0;
    double omni_dbm = kAbsentPowerDbm;
    std::optional<double> path_loss_db; // absent without signal
};

struct RunManifest {
    std::string config_hash; // SHA-256 hex of canonical scenario + spec + seed
    std::uint64_t seed = 0;
    std::string version;
};

struct ResultBundle {
    CampaignSpec spec;
    ScenarioConfig scenario;
    std::vector<SweepSet> sweeps; // location order
    std::vector<LocationResult> locations;
    std::optional<CiFit> fit_los, fit_nlos, fit_all;
    std::optional<FadingRate> fading;
    std::map<std::string, double> group_std; // cluster: local_power_std per group
    RunManifest manifest;
    std::vector<std::filesystem::path> files; // written, relative to output_dir
};

std::string library_version();

/// Hash of everything that determines a bundle's content (not the output
/// path).
std::string manifest_hash(const ScenarioConfig& sc, const CampaignSpec& spec);

using CampaignProgress = std::function<void(std::size_t done, std::size_t total)>;

/// Sweeps every RX of the campaign on a bounded worker pool, runs the
/// kind-specific analysis and, with an output directory, writes the bundle.
/// Module errors are rethrown with the RX id prepended.
ResultBundle run_campaign(const CampaignSpec& spec, const CampaignProgress& progress = {});
ResultBundle run_campaign(const CampaignSpec& spec, const ScenarioConfig& sc,
                          const CampaignProgress& progress = {});

/// Writes the bundle files under dir and records them in bundle.files.
void write_bundle(ResultBundle& bundle, const std::filesystem::path& dir);

enum class PlotKind { PathLoss, Polar, Route };
PlotKind parse_plot_kind(std::string_view s);

/// Plot-ready CSVs under dir. Throws AnalysisError when the bundle lacks the
/// product (no fit for pathloss, no sweeps for polar, not a route for route).
std::vector<std::filesystem::path> emit_plot_data(const ResultBundle& bundle, PlotKind kind,
                                                  const std::filesystem::path& dir);

/// Reads a bundle directory back (bundle.json plus scenario.yaml).
ResultBundle load_bundle(const std::filesystem::path& dir);

/// Fit report text: one "key: value" per line per condition.
std::string fit_report(const ResultBundle& bundle);

void write_pdp_csv(const PowerDelayProfile& pdp, const std::filesystem::path& path);
PowerDelayProfile read_pdp_csv(const std::filesystem::path& path);

void write_angular_spectrum_csv(const std::vector<AngularSample>& spec, const std::filesystem::path& path);

/// Little-endian: "MMSWAVE1", u64 sample count, f64 sample_rate, f64
/// chip_rate, i64 trigger_index, i64 period_samples, then re/im f64 pairs.
void write_waveform_binary(const SampledWaveform& w, const std::filesystem::path& path);
SampledWaveform read_waveform_binary(const std::filesystem::path& path);

/// Columns compressed_time_s, i, q with a key=value header.
void write_cir_csv(const DilatedCir& cir, const std::filesystem::path& path);

/// CSV of (distance_m, path_loss_dB) points for the `fit` verb.
std::vector<PathLossPoint> read_path_loss_points(const std::filesystem::path& path);

} // namespace mmsounder
