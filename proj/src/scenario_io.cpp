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

#include "mmsounder/scenario_io.hpp"
#include "mmsounder/csv.hpp"
#include "mmsounder/errors.hpp"
#include "mmsounder/units.hpp"

#include <json.hpp>
#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace mmsounder {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- YAML in

namespace {

class YamlReader {
public:
    explicit YamlReader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const
    {
        const YAML::Mark m = at.Mark();
        if (m.line >= 0)
            throw ConfigError(source_ + ":" + std::to_string(m.line + 1) + ": " + msg);
        throw ConfigError(source_ + ": " + msg);
    }

    void require_map(const YAML::Node& n, const std::string& what) const
    {
        if (!n.IsMap())
            fail(n, what + " must be a mapping");
    }

    void check_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed,
                    const std::string& where) const
    {
        for (const auto& kv : map) {
            const std::string key = kv.first.as<std::string>();
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
                fail(kv.first, "unknown key '" + key + "' in " + where);
        }
    }

    double number(const YAML::Node& map, const char* key, double fallback) const
    {
        const YAML::Node n = map[key];
        if (!n)
            return fallback;
        return as_number(n, key);
    }

    double required_number(const YAML::Node& map, const char* key, const std::string& where) const
    {
        const YAML::Node n = map[key];
        if (!n)
            fail(map, "missing '" + std::string(key) + "' in " + where);
        return as_number(n, key);
    }

    double as_number(const YAML::Node& n, const std::string& key) const
    {
        if (!n.IsScalar())
            fail(n, "'" + key + "' must be a number");
        try {
            return n.as<double>();
        } catch (const YAML::BadConversion&) {
            fail(n, "'" + key + "' must be a number, got '" + n.Scalar() + "'");
        }
    }

    std::string text(const YAML::Node& map, const char* key, const std::string& fallback) const
    {
        const YAML::Node n = map[key];
        if (!n)
            return fallback;
        if (!n.IsScalar())
            fail(n, "'" + std::string(key) + "' must be a string");
        return n.Scalar();
    }

    bool boolean(const YAML::Node& map, const char* key, bool fallback) const
    {
        const YAML::Node n = map[key];
        if (!n)
            return fallback;
        try {
            return n.as<bool>();
        } catch (const YAML::BadConversion&) {
            fail(n, "'" + std::string(key) + "' must be true or false");
        }
    }

    Eigen::Vector2d point(const YAML::Node& map, const char* key, const std::string& where) const
    {
        const YAML::Node n = map[key];
        if (!n)
            fail(map, "missing '" + std::string(key) + "' in " + where);
        if (!n.IsSequence() || n.size() != 2)
            fail(n, "'" + std::string(key) + "' must be a [x, y] pair");
        return {as_number(n[0], key), as_number(n[1], key)};
    }

    AntennaPattern antenna(const YAML::Node& n, AntennaPattern a, const std::string& where) const
    {
        if (!n)
            return a;
        require_map(n, where);
        check_keys(n, {"boresight_gain_dbi", "hpbw_az_deg", "hpbw_el_deg", "pointing_az_deg", "pointing_el_deg",
                       "sidelobe_floor_db"},
                   where);
        a.boresight_gain = number(n, "boresight_gain_dbi", a.boresight_gain);
        a.hpbw_az = number(n, "hpbw_az_deg", a.hpbw_az);
        a.hpbw_el = number(n, "hpbw_el_deg", a.hpbw_el);
        a.pointing_az = number(n, "pointing_az_deg", a.pointing_az);
        a.pointing_el = number(n, "pointing_el_deg", a.pointing_el);
        a.sidelobe_floor = number(n, "sidelobe_floor_db", a.sidelobe_floor);
        try {
            a.validate();
        } catch (const ConfigError& e) {
            fail(n, where + ": " + e.what());
        }
        return a;
    }

    LinkLabel label(const YAML::Node& map, LinkLabel fallback) const
    {
        const YAML::Node n = map["label"];
        if (!n)
            return fallback;
        const std::string s = n.Scalar();
        if (s == "LOS")
            return LinkLabel::LOS;
        if (s == "NLOS")
            return LinkLabel::NLOS;
        fail(n, "label must be LOS or NLOS, got '" + s + "'");
    }

private:
    std::string source_;
};

std::string label_name(LinkLabel l) { return l == LinkLabel::LOS ? "LOS" : "NLOS"; }

} // namespace

ScenarioConfig parse_scenario(std::string_view yaml, const std::string& source)
{
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml));
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    const YamlReader rd(source);
    if (!root || root.IsNull())
        throw ConfigError(source + ": empty scenario");
    rd.require_map(root, "scenario");
    rd.check_keys(root, {"name", "carrier_frequency_hz", "tx", "rx_antenna", "noise", "walls", "wedges",
                         "rx_defaults", "rx"},
                  "scenario");

    ScenarioConfig sc;
    sc.name = rd.text(root, "name", "");
    sc.carrier_frequency = rd.number(root, "carrier_frequency_hz", sc.carrier_frequency);

    const YAML::Node tx = root["tx"];
    if (!tx)
        rd.fail(root, "missing 'tx' section");
    rd.require_map(tx, "tx");
    rd.check_keys(tx, {"position", "height_m", "power_dbm", "antenna"}, "tx");
    const Eigen::Vector2d txp = rd.point(tx, "position", "tx");
    sc.tx_position = {txp.x(), txp.y(), rd.number(tx, "height_m", 4.0)};
    sc.tx_power_dbm = rd.number(tx, "power_dbm", sc.tx_power_dbm);
    sc.tx_antenna = rd.antenna(tx["antenna"], AntennaPattern::tx_horn(), "tx.antenna");
    sc.rx_antenna = rd.antenna(root["rx_antenna"], AntennaPattern::rx_horn(), "rx_antenna");

    if (const YAML::Node n = root["noise"]) {
        rd.require_map(n, "noise");
        rd.check_keys(n, {"thermal_psd_dbm_hz", "noise_figure_db"}, "noise");
        sc.noise.thermal_psd_dbm_hz = rd.number(n, "thermal_psd_dbm_hz", sc.noise.thermal_psd_dbm_hz);
        sc.noise.noise_figure_db = rd.number(n, "noise_figure_db", sc.noise.noise_figure_db);
    }

    if (const YAML::Node walls = root["walls"]) {
        if (!walls.IsSequence())
            rd.fail(walls, "walls must be a list");
        for (const auto& w : walls) {
            rd.require_map(w, "wall");
            rd.check_keys(w, {"name", "from", "to", "reflective", "reflection_loss_db"}, "wall");
            Wall wall;
            wall.name = rd.text(w, "name", "");
            wall.a = rd.point(w, "from", "wall");
            wall.b = rd.point(w, "to", "wall");
            wall.reflective = rd.boolean(w, "reflective", wall.reflective);
            wall.reflection_loss_db = rd.number(w, "reflection_loss_db", wall.reflection_loss_db);
            sc.walls.push_back(std::move(wall));
        }
    }
    if (const YAML::Node wedges = root["wedges"]) {
        if (!wedges.IsSequence())
            rd.fail(wedges, "wedges must be a list");
        for (const auto& w : wedges) {
            rd.require_map(w, "wedge");
            rd.check_keys(w, {"name", "edge"}, "wedge");
            sc.wedges.push_back({rd.text(w, "name", ""), rd.point(w, "edge", "wedge")});
        }
    }

    double rx_height = 1.5;
    LinkLabel rx_label = LinkLabel::LOS;
    std::string rx_group;
    if (const YAML::Node d = root["rx_defaults"]) {
        rd.require_map(d, "rx_defaults");
        rd.check_keys(d, {"height_m", "label", "group"}, "rx_defaults");
        rx_height = rd.number(d, "height_m", rx_height);
        rx_label = rd.label(d, rx_label);
        rx_group = rd.text(d, "group", rx_group);
    }
    const YAML::Node rxs = root["rx"];
    if (!rxs)
        rd.fail(root, "missing 'rx' list");
    if (!rxs.IsSequence() || rxs.size() == 0)
        rd.fail(rxs, "rx must be a non-empty list");
    std::set<std::string> ids;
    for (const auto& r : rxs) {
        rd.require_map(r, "rx entry");
        rd.check_keys(r, {"id", "position", "height_m", "label", "group"}, "rx entry");
        RxSite site;
        if (!r["id"])
            rd.fail(r, "rx entry needs an 'id'");
        site.id = rd.text(r, "id", "");
        if (!ids.insert(site.id).second)
            rd.fail(r["id"], "duplicate rx id '" + site.id + "'");
        const Eigen::Vector2d p = rd.point(r, "position", "rx entry");
        site.position = {p.x(), p.y(), rd.number(r, "height_m", rx_height)};
        site.label = rd.label(r, rx_label);
        site.group = rd.text(r, "group", rx_group);
        sc.rx.push_back(std::move(site));
    }

    try {
        sc.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return sc;
}

ScenarioConfig load_scenario(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open scenario " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.string());
}

// --------------------------------------------------------------- YAML out

namespace {

std::string quoted(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\')
            out += '\\';
        out += c;
    }
    return out + '"';
}

std::string num(double v) { return format_double(v); }

std::string pair(double x, double y) { return "[" + num(x) + ", " + num(y) + "]"; }

void write_antenna(std::ostream& os, const AntennaPattern& a, const char* indent)
{
    os << indent << "boresight_gain_dbi: " << num(a.boresight_gain) << '\n'
       << indent << "hpbw_az_deg: " << num(a.hpbw_az) << '\n'
       << indent << "hpbw_el_deg: " << num(a.hpbw_el) << '\n'
       << indent << "pointing_az_deg: " << num(a.pointing_az) << '\n'
       << indent << "pointing_el_deg: " << num(a.pointing_el) << '\n'
       << indent << "sidelobe_floor_db: " << num(a.sidelobe_floor) << '\n';
}

} // namespace

std::string scenario_to_yaml(const ScenarioConfig& sc)
{
    std::ostringstream os;
    os << "name: " << quoted(sc.name) << '\n';
    os << "carrier_frequency_hz: " << num(sc.carrier_frequency) << '\n';
    os << "tx:\n"
       << "  position: " << pair(sc.tx_position.x(), sc.tx_position.y()) << '\n'
       << "  height_m: " << num(sc.tx_position.z()) << '\n'
       << "  power_dbm: " << num(sc.tx_power_dbm) << '\n'
       << "  antenna:\n";
    write_antenna(os, sc.tx_antenna, "    ");
    os << "rx_antenna:\n";
    write_antenna(os, sc.rx_antenna, "  ");
    os << "noise:\n"
       << "  thermal_psd_dbm_hz: " << num(sc.noise.thermal_psd_dbm_hz) << '\n'
       << "  noise_figure_db: " << num(sc.noise.noise_figure_db) << '\n';
    os << "walls:" << (sc.walls.empty() ? " []\n" : "\n");
    for (const auto& w : sc.walls)
        os << "  - {name: " << quoted(w.name) << ", from: " << pair(w.a.x(), w.a.y())
           << ", to: " << pair(w.b.x(), w.b.y()) << ", reflective: " << (w.reflective ? "true" : "false")
           << ", reflection_loss_db: " << num(w.reflection_loss_db) << "}\n";
    os << "wedges:" << (sc.wedges.empty() ? " []\n" : "\n");
    for (const auto& w : sc.wedges)
        os << "  - {name: " << quoted(w.name) << ", edge: " << pair(w.edge.x(), w.edge.y()) << "}\n";
    os << "rx:" << (sc.rx.empty() ? " []\n" : "\n");
    for (const auto& r : sc.rx)
        os << "  - {id: " << quoted(r.id) << ", position: " << pair(r.position.x(), r.position.y())
           << ", height_m: " << num(r.position.z()) << ", label: " << label_name(r.label)
           << ", group: " << quoted(r.group) << "}\n";
    return os.str();
}

void write_scenario(const ScenarioConfig& sc, const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out << scenario_to_yaml(sc);
}

// ------------------------------------------------------------------ enums

CampaignKind parse_campaign_kind(std::string_view s)
{
    if (s == "route")
        return CampaignKind::Route;
    if (s == "cluster")
        return CampaignKind::Cluster;
    if (s == "single")
        return CampaignKind::Single;
    throw ConfigError("campaign kind must be route, cluster or single, got '" + std::string(s) + "'");
}

CorrelatorPreset parse_preset(std::string_view s)
{
    if (s == "full")
        return CorrelatorPreset::Full;
    if (s == "desk")
        return CorrelatorPreset::Desk;
    throw ConfigError("preset must be full or desk, got '" + std::string(s) + "'");
}

std::string to_string(CampaignKind k)
{
    switch (k) {
    case CampaignKind::Route: return "route";
    case CampaignKind::Cluster: return "cluster";
    case CampaignKind::Single: return "single";
    }
    return "?";
}

std::string to_string(CorrelatorPreset p) { return p == CorrelatorPreset::Full ? "full" : "desk"; }

CorrelatorConfig preset_config(CorrelatorPreset p)
{
    return p == CorrelatorPreset::Full ? CorrelatorConfig::full() : CorrelatorConfig::desk();
}

PlotKind parse_plot_kind(std::string_view s)
{
    if (s == "pathloss")
        return PlotKind::PathLoss;
    if (s == "polar")
        return PlotKind::Polar;
    if (s == "route")
        return PlotKind::Route;
    throw ConfigError("plot kind must be pathloss, polar or route, got '" + std::string(s) + "'");
}

std::string library_version() { return "0.1.0"; }

// --------------------------------------------------------------- manifest

namespace {

std::string sha256_hex(const std::string& data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw SimulationError("SHA-256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return os.str();
}

std::string canonical_spec(const CampaignSpec& s)
{
    std::ostringstream os;
    os << "kind=" << to_string(s.kind) << '\n'
       << "step_deg=" << num(s.step_deg) << '\n'
       << "sweeps=" << s.sweeps << '\n'
       << "acquisitions=" << s.acquisitions << '\n'
       << "preset=" << to_string(s.preset) << '\n'
       << "seed=" << s.seed << '\n'
       << "rx_index=" << s.rx_index << '\n'
       << "speed_mps=" << num(s.speed_mps) << '\n'
       << "write_pdps=" << s.write_pdps << '\n';
    return os.str();
}

} // namespace

std::string manifest_hash(const ScenarioConfig& sc, const CampaignSpec& spec)
{
    return sha256_hex(scenario_to_yaml(sc) + "---\n" + canonical_spec(spec));
}

// --------------------------------------------------------------- campaign

namespace {

[[noreturn]] void rethrow_with_context(const std::string& ctx)
{
    try {
        throw;
    } catch (const ConfigError& e) {
        throw ConfigError(ctx + e.what());
    } catch (const SimulationError& e) {
        throw SimulationError(ctx + e.what());
    } catch (const AnalysisError& e) {
        throw AnalysisError(ctx + e.what());
    } catch (const std::exception& e) {
        throw SimulationError(ctx + e.what());
    }
}

std::optional<CiFit> try_fit(const std::vector<LocationResult>& locs, std::optional<LinkLabel> label,
                             double frequency)
{
    std::vector<PathLossPoint> pts;
    for (const auto& l : locs)
        if (l.path_loss_db && (!label || l.label == *label) && l.distance_m > 1.0)
            pts.push_back({l.distance_m, *l.path_loss_db});
    try {
        return ci_fit(pts, frequency);
    } catch (const AnalysisError&) {
        return std::nullopt;
    }
}

// Keeps only the strongest record's PDPs.
void prune_pdps(SweepSet& ss)
{
    const DirectionalRecord* best = nullptr;
    for (const auto& r : ss.records)
        if (r.has_signal() && (!best || r.best_power > best->best_power))
            best = &r;
    for (auto& r : ss.records)
        if (&r != best)
            r.pdps.clear();
}

} // namespace

ResultBundle run_campaign(const CampaignSpec& spec, const CampaignProgress& progress)
{
    return run_campaign(spec, load_scenario(spec.scenario_path), progress);
}

ResultBundle run_campaign(const CampaignSpec& spec, const ScenarioConfig& sc, const CampaignProgress& progress)
{
    sc.validate();
    std::vector<std::size_t> indices;
    switch (spec.kind) {
    case CampaignKind::Single:
        if (spec.rx_index >= sc.rx.size())
            throw ConfigError("rx index " + std::to_string(spec.rx_index) + " out of range");
        indices.push_back(spec.rx_index);
        break;
    case CampaignKind::Route:
        if (sc.rx.size() < 2)
            throw ConfigError("route campaign needs at least two RX locations");
        [[fallthrough]];
    case CampaignKind::Cluster:
        for (std::size_t i = 0; i < sc.rx.size(); ++i)
            indices.push_back(i);
        break;
    }
    if (spec.kind == CampaignKind::Cluster) {
        std::map<std::string, int> sizes;
        for (const auto& r : sc.rx)
            ++sizes[r.group];
        if (sizes.size() < 2 || sizes.count(""))
            throw ConfigError("cluster campaign needs every RX in a named group and at least two groups");
    }

    ResultBundle b;
    b.spec = spec;
    b.scenario = sc;
    b.sweeps.resize(indices.size());

    SweepOptions opt;
    opt.step_deg = spec.step_deg;
    opt.sweeps = spec.sweeps;
    opt.acquisitions = spec.acquisitions;
    opt.seed = spec.seed;
    opt.correlator = preset_config(spec.preset);

    std::stop_source stop;
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t done = 0;
    std::exception_ptr first_error;

    auto worker = [&]() {
        SweepOptions local = opt;
        local.stop = stop.get_token();
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= indices.size() || stop.stop_requested())
                return;
            const RxSite& site = sc.rx[indices[k]];
            try {
                try {
                    SweepSet ss = run_sweep(sc, indices[k], local);
                    prune_pdps(ss);
                    b.sweeps[k] = std::move(ss);
                } catch (...) {
                    rethrow_with_context("RX " + site.id + ": ");
                }
            } catch (...) {
                std::lock_guard lock(mu);
                if (!first_error) {
                    first_error = std::current_exception();
                    stop.request_stop();
                }
                return;
            }
            std::lock_guard lock(mu);
            ++done;
            if (progress)
                progress(done, indices.size());
        }
    };

    std::size_t n_workers = spec.workers ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
    n_workers = std::min(n_workers, indices.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < n_workers; ++i)
            pool.emplace_back(worker);
    }
    if (first_error)
        std::rethrow_exception(first_error);

    double position = 0.0;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const RxSite& site = sc.rx[indices[k]];
        if (k > 0)
            position += (site.position.head<2>() - sc.rx[indices[k - 1]].position.head<2>()).norm();
        LocationResult loc;
        loc.rx_id = site.id;
        loc.group = site.group;
        loc.label = site.label;
        loc.position_m = position;
        loc.distance_m = b.sweeps[k].distance_m;
        try {
            loc.omni_dbm = omni_power(b.sweeps[k]);
            loc.path_loss_db = path_loss(loc.omni_dbm, sc.tx_power_dbm, sc.tx_antenna.boresight_gain,
                                         sc.rx_antenna.boresight_gain);
        } catch (const AnalysisError&) {
            loc.omni_dbm = kAbsentPowerDbm;
        }
        b.locations.push_back(std::move(loc));
    }

    if (spec.kind != CampaignKind::Single) {
        b.fit_los = try_fit(b.locations, LinkLabel::LOS, sc.carrier_frequency);
        b.fit_nlos = try_fit(b.locations, LinkLabel::NLOS, sc.carrier_frequency);
        b.fit_all = try_fit(b.locations, std::nullopt, sc.carrier_frequency);
    }
    if (spec.kind == CampaignKind::Route) {
        std::vector<RoutePoint> route;
        std::vector<std::size_t> at;
        for (std::size_t k = 0; k < b.locations.size(); ++k)
            if (b.locations[k].path_loss_db) {
                route.push_back({b.locations[k].position_m, b.locations[k].omni_dbm});
                at.push_back(k);
            }
        if (route.size() >= 2) {
            FadingRate f = fading_rate(route, spec.speed_mps);
            f.first = at[f.first];
            f.last = at[f.last];
            b.fading = f;
        }
    }
    if (spec.kind == CampaignKind::Cluster) {
        std::map<std::string, std::vector<double>> groups;
        for (const auto& l : b.locations)
            if (l.path_loss_db)
                groups[l.group].push_back(l.omni_dbm);
        for (const auto& [g, v] : groups)
            if (v.size() >= 2)
                b.group_std[g] = local_power_std(v);
    }

    b.manifest.config_hash = manifest_hash(sc, spec);
    b.manifest.seed = spec.seed;
    b.manifest.version = library_version();

    if (!spec.output_dir.empty())
        write_bundle(b, spec.output_dir);
    return b;
}

// ----------------------------------------------------------------- output

namespace {

std::string safe_name(const std::string& id)
{
    std::string out = id.empty() ? "rx" : id;
    for (char& c : out)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'))
            c = '_';
    return out;
}

std::ofstream open_out(const fs::path& path)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    return out;
}

std::string flag(LinkLabel l) { return l == LinkLabel::LOS ? "1" : "0"; }

json fit_json(const CiFit& f)
{
    return {{"ple", f.ple}, {"sigma_db", f.sigma}, {"d0_m", f.d0}, {"frequency_hz", f.frequency},
            {"point_count", f.point_count}};
}

CiFit fit_from_json(const json& j)
{
    CiFit f;
    f.ple = j.at("ple").get<double>();
    f.sigma = j.at("sigma_db").get<double>();
    f.d0 = j.at("d0_m").get<double>();
    f.frequency = j.at("frequency_hz").get<double>();
    f.point_count = j.at("point_count").get<std::size_t>();
    return f;
}

void write_fit_block(std::ostream& os, const std::string& name, const std::optional<CiFit>& f)
{
    if (!f) {
        os << "[" << name << "]\nstatus: absent\n\n";
        return;
    }
    os << "[" << name << "]\n"
       << "ple: " << num(f->ple) << '\n'
       << "sigma_db: " << num(f->sigma) << '\n'
       << "point_count: " << f->point_count << '\n'
       << "frequency_hz: " << num(f->frequency) << '\n'
       << "d0_m: " << num(f->d0) << "\n\n";
}

} // namespace

std::string fit_report(const ResultBundle& b)
{
    std::ostringstream os;
    os << "# CI path loss fits, d0 = 1 m\n";
    os << "campaign: " << to_string(b.spec.kind) << "\n\n";
    write_fit_block(os, "LOS", b.fit_los);
    write_fit_block(os, "NLOS", b.fit_nlos);
    write_fit_block(os, "ALL", b.fit_all);
    if (b.fading) {
        os << "[fading]\n"
           << "db_per_m: " << num(b.fading->db_per_m) << '\n'
           << "db_per_s: " << num(b.fading->db_per_s) << '\n'
           << "speed_mps: " << num(b.spec.speed_mps) << '\n'
           << "segment: " << b.locations.at(b.fading->first).rx_id << " .. "
           << b.locations.at(b.fading->last).rx_id << "\n\n";
    }
    for (const auto& [g, s] : b.group_std)
        os << "[local_power_std " << g << "]\nstd_db: " << num(s) << "\n\n";
    return os.str();
}

void write_pdp_csv(const PowerDelayProfile& pdp, const fs::path& path)
{
    CsvTable t;
    t.meta = {{"noise_floor_dBm", num(pdp.noise_floor)},
              {"threshold_dBm", num(pdp.threshold)},
              {"peak_dBm", num(pdp.peak_power)},
              {"total_dBm", num(pdp.total_power)},
              {"pulse_energy", num(pdp.pulse_energy)},
              {"delay_step_s", num(pdp.delay_step)},
              {"angle_deg", num(pdp.meta.angle_deg)},
              {"location", pdp.meta.location},
              {"sweep", std::to_string(pdp.meta.sweep)}};
    t.header = {"excess_delay_ns", "power_dBm"};
    const Eigen::VectorXd tau = pdp.excess_delay();
    t.rows.reserve(static_cast<std::size_t>(pdp.size()));
    for (Eigen::Index i = 0; i < pdp.size(); ++i)
        t.rows.push_back({num(tau(i) * 1e9), num(linear_to_db(pdp.power(i)))});
    auto out = open_out(path);
    write_csv(out, t);
}

namespace {

double parse_double(const std::string& s, const std::string& what)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw AnalysisError("bad number '" + s + "' for " + what);
    return v;
}

std::string meta_value(const CsvTable& t, const std::string& key)
{
    for (const auto& [k, v] : t.meta)
        if (k == key)
            return v;
    throw AnalysisError("CSV lacks header entry '" + key + "'");
}

} // namespace

PowerDelayProfile read_pdp_csv(const fs::path& path)
{
    const CsvTable t = read_csv_file(path);
    PowerDelayProfile pdp;
    pdp.noise_floor = parse_double(meta_value(t, "noise_floor_dBm"), "noise_floor_dBm");
    pdp.threshold = parse_double(meta_value(t, "threshold_dBm"), "threshold_dBm");
    pdp.peak_power = parse_double(meta_value(t, "peak_dBm"), "peak_dBm");
    pdp.total_power = parse_double(meta_value(t, "total_dBm"), "total_dBm");
    pdp.pulse_energy = parse_double(meta_value(t, "pulse_energy"), "pulse_energy");
    pdp.delay_step = parse_double(meta_value(t, "delay_step_s"), "delay_step_s");
    pdp.meta.angle_deg = parse_double(meta_value(t, "angle_deg"), "angle_deg");
    pdp.meta.location = meta_value(t, "location");
    pdp.meta.sweep = std::stoi(meta_value(t, "sweep"));
    const std::size_t col = t.column("power_dBm");
    pdp.power.resize(static_cast<Eigen::Index>(t.rows.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double db = parse_double(t.rows[i][col], "power_dBm");
        pdp.power(static_cast<Eigen::Index>(i)) = std::isinf(db) && db < 0 ? 0.0 : db_to_linear(db);
    }
    return pdp;
}

void write_angular_spectrum_csv(const std::vector<AngularSample>& spec, const fs::path& path)
{
    CsvTable t;
    t.header = {"azimuth_deg", "power_dBm"};
    for (const auto& s : spec)
        t.rows.push_back({num(s.azimuth_deg), num(s.power_dbm)});
    auto out = open_out(path);
    write_csv(out, t);
}

void write_bundle(ResultBundle& b, const fs::path& dir)
{
    fs::create_directories(dir);
    b.files.clear();
    auto record = [&](const fs::path& rel) { b.files.push_back(rel); };

    write_scenario(b.scenario, dir / "scenario.yaml");
    record("scenario.yaml");

    {
        CsvTable t;
        t.header = {"rx_id", "group", "position_m", "distance_m", "omni_dBm", "path_loss_dB", "los_flag"};
        for (const auto& l : b.locations)
            t.rows.push_back({l.rx_id, l.group, num(l.position_m), num(l.distance_m), num(l.omni_dbm),
                              l.path_loss_db ? num(*l.path_loss_db) : "", flag(l.label)});
        auto out = open_out(dir / "locations.csv");
        write_csv(out, t);
        record("locations.csv");
    }
    if (b.spec.kind == CampaignKind::Route) {
        CsvTable t;
        t.header = {"position_m", "distance_m", "omni_dBm", "path_loss_dB", "los_flag"};
        for (const auto& l : b.locations)
            t.rows.push_back({num(l.position_m), num(l.distance_m), num(l.omni_dbm),
                              l.path_loss_db ? num(*l.path_loss_db) : "", flag(l.label)});
        auto out = open_out(dir / "route_report.csv");
        write_csv(out, t);
        record("route_report.csv");
    }
    {
        auto out = open_out(dir / "fit_report.txt");
        out << fit_report(b);
        record("fit_report.txt");
    }
    for (const auto& ss : b.sweeps) {
        const fs::path rel = fs::path("spectra") / (safe_name(ss.rx_location) + ".csv");
        write_angular_spectrum_csv(angular_spectrum(ss), dir / rel);
        record(rel);
        if (!b.spec.write_pdps)
            continue;
        const PowerDelayProfile* best = nullptr;
        for (const auto& r : ss.records)
            for (const auto& p : r.pdps)
                if (p.has_signal() && (!best || p.total_power > best->total_power))
                    best = &p;
        if (best) {
            const fs::path prel = fs::path("pdp") / (safe_name(ss.rx_location) + ".csv");
            write_pdp_csv(*best, dir / prel);
            record(prel);
        }
    }

    json j;
    j["version"] = b.manifest.version;
    j["campaign"] = {{"kind", to_string(b.spec.kind)},
                     {"preset", to_string(b.spec.preset)},
                     {"step_deg", b.spec.step_deg},
                     {"sweeps", b.spec.sweeps},
                     {"acquisitions", b.spec.acquisitions},
                     {"seed", b.spec.seed},
                     {"rx_index", b.spec.rx_index},
                     {"speed_mps", b.spec.speed_mps},
                     {"write_pdps", b.spec.write_pdps}};
    json locs = json::array();
    for (std::size_t k = 0; k < b.locations.size(); ++k) {
        const auto& l = b.locations[k];
        json spectrum = json::array();
        for (const auto& s : angular_spectrum(b.sweeps[k]))
            spectrum.push_back({s.azimuth_deg, s.power_dbm});
        locs.push_back({{"rx_id", l.rx_id},
                        {"group", l.group},
                        {"label", label_name(l.label)},
                        {"position_m", l.position_m},
                        {"distance_m", l.distance_m},
                        {"omni_dbm", l.omni_dbm},
                        {"path_loss_db", l.path_loss_db ? json(*l.path_loss_db) : json(nullptr)},
                        {"rx_elevation_deg", b.sweeps[k].rx_elevation},
                        {"spectrum", spectrum}});
    }
    j["locations"] = locs;
    json fits = json::object();
    if (b.fit_los)
        fits["LOS"] = fit_json(*b.fit_los);
    if (b.fit_nlos)
        fits["NLOS"] = fit_json(*b.fit_nlos);
    if (b.fit_all)
        fits["ALL"] = fit_json(*b.fit_all);
    j["fits"] = fits;
    if (b.fading)
        j["fading"] = {{"db_per_m", b.fading->db_per_m}, {"db_per_s", b.fading->db_per_s},
                       {"first", b.fading->first}, {"last", b.fading->last}};
    j["group_std_db"] = b.group_std;
    {
        auto out = open_out(dir / "bundle.json");
        out << j.dump(2) << '\n';
        record("bundle.json");
    }

    json m;
    m["config_hash"] = b.manifest.config_hash;
    m["seed"] = b.manifest.seed;
    m["version"] = b.manifest.version;
    json files = json::array();
    for (const auto& f : b.files)
        files.push_back(f.generic_string());
    m["files"] = files;
    auto out = open_out(dir / "manifest.json");
    out << m.dump(2) << '\n';
    record("manifest.json");
}

ResultBundle load_bundle(const fs::path& dir)
{
    std::ifstream in(dir / "bundle.json", std::ios::binary);
    if (!in)
        throw AnalysisError("no bundle.json in " + dir.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw AnalysisError("bundle.json: " + std::string(e.what()));
    }
    ResultBundle b;
    try {
        b.scenario = load_scenario(dir / "scenario.yaml");
        const json& c = j.at("campaign");
        b.spec.kind = parse_campaign_kind(c.at("kind").get<std::string>());
        b.spec.preset = parse_preset(c.at("preset").get<std::string>());
        b.spec.step_deg = c.at("step_deg").get<double>();
        b.spec.sweeps = c.at("sweeps").get<int>();
        b.spec.acquisitions = c.at("acquisitions").get<int>();
        b.spec.seed = c.at("seed").get<std::uint64_t>();
        b.spec.rx_index = c.at("rx_index").get<std::size_t>();
        b.spec.speed_mps = c.at("speed_mps").get<double>();
        b.spec.write_pdps = c.at("write_pdps").get<bool>();
        b.spec.output_dir = dir;
        b.manifest.version = j.at("version").get<std::string>();
        b.manifest.seed = b.spec.seed;
        b.manifest.config_hash = manifest_hash(b.scenario, b.spec);
        for (const auto& l : j.at("locations")) {
            LocationResult loc;
            loc.rx_id = l.at("rx_id").get<std::string>();
            loc.group = l.at("group").get<std::string>();
            loc.label = l.at("label").get<std::string>() == "LOS" ? LinkLabel::LOS : LinkLabel::NLOS;
            loc.position_m = l.at("position_m").get<double>();
            loc.distance_m = l.at("distance_m").get<double>();
            loc.omni_dbm = l.at("omni_dbm").get<double>();
            if (!l.at("path_loss_db").is_null())
                loc.path_loss_db = l.at("path_loss_db").get<double>();
            SweepSet ss;
            ss.rx_location = loc.rx_id;
            ss.distance_m = loc.distance_m;
            ss.label = loc.label;
            ss.group = loc.group;
            ss.step_deg = b.spec.step_deg;
            ss.sweeps = b.spec.sweeps;
            ss.rx_elevation = l.at("rx_elevation_deg").get<double>();
            for (const auto& s : l.at("spectrum")) {
                DirectionalRecord r;
                r.rx_azimuth = s.at(0).get<double>();
                r.best_power = s.at(1).get<double>();
                ss.records.push_back(std::move(r));
            }
            b.sweeps.push_back(std::move(ss));
            b.locations.push_back(std::move(loc));
        }
        const json& fits = j.at("fits");
        if (fits.contains("LOS"))
            b.fit_los = fit_from_json(fits["LOS"]);
        if (fits.contains("NLOS"))
            b.fit_nlos = fit_from_json(fits["NLOS"]);
        if (fits.contains("ALL"))
            b.fit_all = fit_from_json(fits["ALL"]);
        if (j.contains("fading")) {
            FadingRate f;
            f.db_per_m = j["fading"].at("db_per_m").get<double>();
            f.db_per_s = j["fading"].at("db_per_s").get<double>();
            f.first = j["fading"].at("first").get<std::size_t>();
            f.last = j["fading"].at("last").get<std::size_t>();
            b.fading = f;
        }
        b.group_std = j.at("group_std_db").get<std::map<std::string, double>>();
    } catch (const json::exception& e) {
        throw AnalysisError("bundle.json: " + std::string(e.what()));
    }
    return b;
}

std::vector<fs::path> emit_plot_data(const ResultBundle& b, PlotKind kind, const fs::path& dir)
{
    std::vector<fs::path> written;
    switch (kind) {
    case PlotKind::PathLoss: {
        if (!b.fit_los && !b.fit_nlos && !b.fit_all)
            throw AnalysisError("bundle has no CI fit to plot");
        CsvTable t;
        t.header = {"condition", "series", "distance_m", "log10_distance", "path_loss_dB"};
        auto emit = [&](const std::string& name, const std::optional<CiFit>& fit,
                        std::optional<LinkLabel> label) {
            if (!fit)
                return;
            double dmin = 0.0, dmax = 0.0;
            bool any = false;
            for (const auto& l : b.locations) {
                if (!l.path_loss_db || (label && l.label != *label))
                    continue;
                t.rows.push_back({name, "measured", num(l.distance_m), num(std::log10(l.distance_m)),
                                  num(*l.path_loss_db)});
                dmin = any ? std::min(dmin, l.distance_m) : l.distance_m;
                dmax = any ? std::max(dmax, l.distance_m) : l.distance_m;
                any = true;
            }
            const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(50, std::log10(dmin), std::log10(dmax));
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                const double d = std::pow(10.0, x(i));
                t.rows.push_back({name, "ci_fit", num(d), num(x(i)), num(fit->predict(d))});
            }
        };
        emit("LOS", b.fit_los, LinkLabel::LOS);
        emit("NLOS", b.fit_nlos, LinkLabel::NLOS);
        emit("ALL", b.fit_all, std::nullopt);
        auto out = open_out(dir / "pathloss.csv");
        write_csv(out, t);
        written.push_back(dir / "pathloss.csv");
        break;
    }
    case PlotKind::Polar: {
        if (b.sweeps.empty())
            throw AnalysisError("bundle has no sweeps to plot");
        for (const auto& ss : b.sweeps) {
            const fs::path p = dir / "polar" / (safe_name(ss.rx_location) + ".csv");
            write_angular_spectrum_csv(angular_spectrum(ss), p);
            written.push_back(p);
        }
        break;
    }
    case PlotKind::Route: {
        if (b.spec.kind != CampaignKind::Route)
            throw AnalysisError("bundle is not a route campaign");
        std::vector<const LocationResult*> order;
        for (const auto& l : b.locations)
            order.push_back(&l);
        std::stable_sort(order.begin(), order.end(), [](const LocationResult* a, const LocationResult* c) {
            return a->position_m < c->position_m;
        });
        CsvTable t;
        t.header = {"rx_id", "position_m", "omni_dBm", "los_flag"};
        for (const auto* l : order)
            t.rows.push_back({l->rx_id, num(l->position_m), num(l->omni_dbm), flag(l->label)});
        auto out = open_out(dir / "route.csv");
        write_csv(out, t);
        written.push_back(dir / "route.csv");
        break;
    }
    }
    return written;
}

// ---------------------------------------------------------------- binary

namespace {

constexpr char kWaveMagic[8] = {'M', 'M', 'S', 'W', 'A', 'V', 'E', '1'};

template <typename T>
void put_le(std::ostream& os, T v)
{
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(buf, buf + sizeof(T));
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& is)
{
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T)))
        throw ConfigError("waveform file truncated");
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

} // namespace

void write_waveform_binary(const SampledWaveform& w, const fs::path& path)
{
    auto out = open_out(path);
    out.write(kWaveMagic, sizeof kWaveMagic);
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(w.size()));
    put_le<double>(out, w.sample_rate);
    put_le<double>(out, w.chip_rate);
    put_le<std::int64_t>(out, w.trigger_index);
    put_le<std::int64_t>(out, w.period_samples);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        put_le<double>(out, w.samples(i).real());
        put_le<double>(out, w.samples(i).imag());
    }
}

SampledWaveform read_waveform_binary(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open " + path.string());
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kWaveMagic, sizeof magic) != 0)
        throw ConfigError(path.string() + " is not a waveform file");
    SampledWaveform w;
    const auto n = get_le<std::uint64_t>(in);
    w.sample_rate = get_le<double>(in);
    w.chip_rate = get_le<double>(in);
    w.trigger_index = get_le<std::int64_t>(in);
    w.period_samples = get_le<std::int64_t>(in);
    w.samples.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double re = get_le<double>(in);
        const double im = get_le<double>(in);
        w.samples(i) = {re, im};
    }
    return w;
}

void write_cir_csv(const DilatedCir& cir, const fs::path& path)
{
    CsvTable t;
    t.meta = {{"slide_factor", num(cir.slide_factor)},
              {"compressed_sample_rate_hz", num(cir.compressed_sample_rate)},
              {"compressed_bandwidth_hz", num(cir.compressed_bandwidth)},
              {"dilated_period_s", num(cir.dilated_period)},
              {"tx_chip_rate_hz", num(cir.tx_chip_rate)}};
    t.header = {"compressed_time_s", "i", "q"};
    for (Eigen::Index k = 0; k < cir.size(); ++k)
        t.rows.push_back({num(static_cast<double>(k) / cir.compressed_sample_rate), num(cir.i_channel(k)),
                          num(cir.q_channel(k))});
    auto out = open_out(path);
    write_csv(out, t);
}

std::vector<PathLossPoint> read_path_loss_points(const fs::path& path)
{
    const CsvTable t = read_csv_file(path);
    const std::size_t cd = t.column("distance_m");
    const std::size_t cp = t.column("path_loss_dB");
    std::vector<PathLossPoint> pts;
    for (const auto& r : t.rows)
        pts.push_back({parse_double(r[cd], "distance_m"), parse_double(r[cp], "path_loss_dB")});
    return pts;
}

} // namespace mmsounder
