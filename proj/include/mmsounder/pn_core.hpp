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

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace mmsounder {

/// Register contents, one entry per stage (0 or 1). Entry i is stage i+1.
using BitVector = Eigen::VectorXi;

/// Fibonacci LFSR description. Stage 1 receives the feedback bit; the output
/// is read from the highest stage (`order`).
struct LfsrSpec {
    int order = 0;
    std::vector<int> feedback_taps; // 1-indexed, must contain `order`
    BitVector seed;

    /// Throws ConfigError on order < 2, taps outside 1..order, missing tap
    /// `order`, or a seed of the wrong length / all zeros.
    void validate() const;

    std::int64_t maximal_length() const { return (std::int64_t{1} << order) - 1; }

    bool operator==(const LfsrSpec& o) const
    {
        return order == o.order && feedback_taps == o.feedback_taps && seed == o.seed;
    }
};

/// Shipped presets, all-ones seed: order 11 taps {11,9}, order 7 taps {7,6},
/// order 3 taps {3,2}. Throws ConfigError for any other order.
LfsrSpec msequence_preset(int order);

struct LfsrStepResult {
    int bit;
    BitVector state;
};

/// One Fibonacci shift. Throws SimulationError on an all-zero state.
LfsrStepResult lfsr_step(const BitVector& state, const LfsrSpec& spec);

/// Number of steps until the register returns to the seed.
std::int64_t lfsr_period(const LfsrSpec& spec);

/// Bipolar PN code. Bit 1 maps to +1, bit 0 to -1.
struct ChipSequence {
    Eigen::VectorXd chips;
    LfsrSpec spec;

    Eigen::Index length() const { return chips.size(); }
};

/// Serial generation of one full period. Throws ConfigError when the tap set
/// is not primitive (period shorter than 2^order - 1).
ChipSequence generate_msequence(const LfsrSpec& spec);

// GF(2) state-transition matrix A with next_state = A * state (mod 2).
Eigen::MatrixXi lfsr_transition_matrix(const LfsrSpec& spec);

// A^power over GF(2), by repeated squaring.
Eigen::MatrixXi gf2_power(const Eigen::MatrixXi& a, std::int64_t power);

/// Leap-forward generation: each cycle emits `chips_per_cycle` chips from a
/// precomputed output matrix and advances the register by A^chips_per_cycle.
/// Bit-identical to generate_msequence.
ChipSequence generate_leapforward(const LfsrSpec& spec, int chips_per_cycle);

/// sum_k chips[k] * chips[(k + lag) mod N]. Lag must be in [0, N).
double periodic_autocorrelation(const ChipSequence& seq, Eigen::Index lag);

} // namespace mmsounder
