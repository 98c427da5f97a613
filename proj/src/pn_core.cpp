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

#include "mmsounder/pn_core.hpp"
#include "mmsounder/errors.hpp"

#include <algorithm>
#include <string>

namespace mmsounder {

namespace {

constexpr int kMaxOrder = 24;

Eigen::MatrixXi mod2(const Eigen::MatrixXi& m)
{
    return m.unaryExpr([](int v) { return v & 1; });
}

ChipSequence to_bipolar(const std::vector<int>& bits, const LfsrSpec& spec)
{
    ChipSequence seq;
    seq.spec = spec;
    seq.chips.resize(static_cast<Eigen::Index>(bits.size()));
    for (std::size_t i = 0; i < bits.size(); ++i)
        seq.chips(static_cast<Eigen::Index>(i)) = bits[i] ? 1.0 : -1.0;
    return seq;
}

} // namespace

void LfsrSpec::validate() const
{
    if (order < 2 || order > kMaxOrder)
        throw ConfigError("LFSR order must be in [2, " + std::to_string(kMaxOrder) + "], got " +
                          std::to_string(order));
    if (feedback_taps.empty())
        throw ConfigError("LFSR needs at least one feedback tap");
    for (int t : feedback_taps)
        if (t < 1 || t > order)
            throw ConfigError("LFSR tap " + std::to_string(t) + " outside 1.." + std::to_string(order));
    if (std::find(feedback_taps.begin(), feedback_taps.end(), order) == feedback_taps.end())
        throw ConfigError("LFSR taps must include the last stage " + std::to_string(order));
    if (seed.size() != order)
        throw ConfigError("LFSR seed length " + std::to_string(seed.size()) + " != order " +
                          std::to_string(order));
    if ((seed.array() != 0 && seed.array() != 1).any())
        throw ConfigError("LFSR seed must contain only 0/1");
    if (seed.sum() == 0)
        throw ConfigError("LFSR seed must not be all zeros");
}

LfsrSpec msequence_preset(int order)
{
    LfsrSpec spec;
    spec.order = order;
    switch (order) {
    case 11: spec.feedback_taps = {11, 9}; break;
    case 7: spec.feedback_taps = {7, 6}; break;
    case 3: spec.feedback_taps = {3, 2}; break;
    default: throw ConfigError("no m-sequence preset for order " + std::to_string(order));
    }
    spec.seed = BitVector::Ones(order);
    return spec;
}

LfsrStepResult lfsr_step(const BitVector& state, const LfsrSpec& spec)
{
    if (state.size() != spec.order)
        throw ConfigError("LFSR state length does not match order");
    if ((state.array() == 0).all())
        throw SimulationError("LFSR entered the degenerate all-zero state");

    int feedback = 0;
    for (int t : spec.feedback_taps)
        feedback ^= state(t - 1) & 1;

    LfsrStepResult r{state(spec.order - 1) & 1, BitVector(spec.order)};
    r.state(0) = feedback;
    r.state.tail(spec.order - 1) = state.head(spec.order - 1);
    return r;
}

std::int64_t lfsr_period(const LfsrSpec& spec)
{
    spec.validate();
    BitVector state = spec.seed;
    const std::int64_t limit = std::int64_t{1} << spec.order;
    for (std::int64_t n = 1; n <= limit; ++n) {
        state = lfsr_step(state, spec).state;
        if (state == spec.seed)
            return n;
    }
    // Unreachable for a non-singular feedback (tap `order` present).
    throw SimulationError("LFSR never returned to its seed");
}

ChipSequence generate_msequence(const LfsrSpec& spec)
{
    spec.validate();
    const std::int64_t n = spec.maximal_length();
    std::vector<int> bits;
    bits.reserve(static_cast<std::size_t>(n));
    BitVector state = spec.seed;
    for (std::int64_t k = 0; k < n; ++k) {
        auto step = lfsr_step(state, spec);
        bits.push_back(step.bit);
        state = std::move(step.state);
        if (k + 1 < n && state == spec.seed)
            throw ConfigError("feedback taps are not primitive: period " + std::to_string(k + 1) +
                              " < " + std::to_string(n));
    }
    return to_bipolar(bits, spec);
}

Eigen::MatrixXi lfsr_transition_matrix(const LfsrSpec& spec)
{
    spec.validate();
    Eigen::MatrixXi a = Eigen::MatrixXi::Zero(spec.order, spec.order);
    for (int t : spec.feedback_taps)
        a(0, t - 1) ^= 1;
    for (int i = 1; i < spec.order; ++i)
        a(i, i - 1) = 1;
    return a;
}

Eigen::MatrixXi gf2_power(const Eigen::MatrixXi& a, std::int64_t power)
{
    Eigen::MatrixXi result = Eigen::MatrixXi::Identity(a.rows(), a.cols());
    Eigen::MatrixXi base = mod2(a);
    while (power > 0) {
        if (power & 1)
            result = mod2(result * base);
        base = mod2(base * base);
        power >>= 1;
    }
    return result;
}

ChipSequence generate_leapforward(const LfsrSpec& spec, int chips_per_cycle)
{
    spec.validate();
    if (chips_per_cycle < 1)
        throw ConfigError("chips_per_cycle must be >= 1");

    const Eigen::MatrixXi step = lfsr_transition_matrix(spec);
    const Eigen::MatrixXi leap = gf2_power(step, chips_per_cycle);

    // Row j of `taps_out` reads the output stage after j single steps.
    Eigen::MatrixXi taps_out(chips_per_cycle, spec.order);
    Eigen::MatrixXi walk = Eigen::MatrixXi::Identity(spec.order, spec.order);
    for (int j = 0; j < chips_per_cycle; ++j) {
        taps_out.row(j) = walk.row(spec.order - 1);
        walk = mod2(step * walk);
    }

    const std::int64_t n = spec.maximal_length();
    std::vector<int> bits;
    bits.reserve(static_cast<std::size_t>(n));
    BitVector state = spec.seed;
    while (static_cast<std::int64_t>(bits.size()) < n) {
        const Eigen::VectorXi cycle = mod2(taps_out * state);
        for (int j = 0; j < chips_per_cycle && static_cast<std::int64_t>(bits.size()) < n; ++j)
            bits.push_back(cycle(j));
        state = mod2(leap * state);
    }
    return to_bipolar(bits, spec);
}

double periodic_autocorrelation(const ChipSequence& seq, Eigen::Index lag)
{
    const Eigen::Index n = seq.length();
    if (lag < 0 || lag >= n)
        throw ConfigError("autocorrelation lag out of range");
    double acc = 0.0;
    for (Eigen::Index k = 0; k < n; ++k)
        acc += seq.chips(k) * seq.chips((k + lag) % n);
    return acc;
}

} // namespace mmsounder
