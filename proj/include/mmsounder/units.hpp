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

#include <cmath>
#include <concepts>
#include <limits>

namespace mmsounder {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = 3.14159265358979323846;

/// Power reported for angles or samples with no detectable signal.
inline constexpr double kAbsentPowerDbm = -200.0;

template <std::floating_point T>
T db_to_linear(T db) { return std::pow(T(10), db / T(10)); }

/// Linear power to dB. Zero maps to -inf.
template <std::floating_point T>
T linear_to_db(T lin)
{
    if (lin <= T(0))
        return -std::numeric_limits<T>::infinity();
    return T(10) * std::log10(lin);
}

template <std::floating_point T>
T deg_to_rad(T deg) { return deg * T(kPi) / T(180); }

template <std::floating_point T>
T rad_to_deg(T rad) { return rad * T(180) / T(kPi); }

/// Wrap an angle difference into [-180, 180).
template <std::floating_point T>
T wrap_deg_180(T deg)
{
    T w = std::fmod(deg + T(180), T(360));
    if (w < T(0))
        w += T(360);
    return w - T(180);
}

/// Wrap an azimuth into [0, 360).
template <std::floating_point T>
T wrap_deg_360(T deg)
{
    T w = std::fmod(deg, T(360));
    if (w < T(0))
        w += T(360);
    return w >= T(360) ? T(0) : w;
}

} // namespace mmsounder
