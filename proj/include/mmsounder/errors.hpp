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

#include <stdexcept>
#include <string>

namespace mmsounder {

// Three failure families, one per CLI exit code (2, 3, 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept = 0;
};

/// Invalid configuration: bad LFSR spec, schema violation, out-of-range parameter.
class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// The simulation cannot proceed: delay ambiguity, too-short input, degenerate LFSR state.
class SimulationError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

/// An analysis product cannot be formed: no signal, ill-conditioned fit, missing product.
class AnalysisError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

} // namespace mmsounder
