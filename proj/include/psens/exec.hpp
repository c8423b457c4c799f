// Copyright 2026 The psens Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PSENS_EXEC_HPP
#define PSENS_EXEC_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include <psens/diff.hpp>
#include <psens/expr.hpp>

namespace psens
{

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Instruction {
    Op op;
    std::uint32_t out;
    std::uint32_t lhs;
    std::uint32_t rhs; // unused for unary ops
    double exponent;   // Op::kPow only

    friend bool operator==(const Instruction &, const Instruction &) = default;
};

/// Single-assignment evaluation tape compiled from labelled graph roots.
///
/// Slot layout: input slots first (in input order), then constant slots
/// (in node-id order), then one slot per instruction. Every instruction
/// reads only slots written before it.
class Program
{
public:
    std::span<const Instruction> instructions() const noexcept { return m_code; }
    std::size_t slot_count() const noexcept { return m_slot_count; }
    const std::vector<std::string> &inputs() const noexcept { return m_inputs; }
    const std::vector<std::string> &outputs() const noexcept { return m_outputs; }
    std::span<const std::uint32_t> output_slots() const noexcept { return m_output_slots; }
    std::span<const std::pair<std::uint32_t, double>> constants() const noexcept { return m_constants; }

    // One "slot ← op(args)" line per input, constant, instruction and output.
    std::string dump() const;

    friend bool operator==(const Program &, const Program &) = default;

private:
    friend Program compile(const ExprGraph &, std::span<const NamedNode>, std::span<const std::string>);

    std::vector<Instruction> m_code;
    std::size_t m_slot_count = 0;
    std::vector<std::string> m_inputs;
    std::vector<std::string> m_outputs;
    std::vector<std::uint32_t> m_output_slots;
    std::vector<std::pair<std::uint32_t, double>> m_constants;
};

// Throws if a variable reachable from `roots` is missing from `input_vars`.
Program compile(const ExprGraph &g, std::span<const NamedNode> roots, std::span<const std::string> input_vars);

struct EvalOutcome {
    Eigen::VectorXd values;
    // False where the value is non-finite or a domain violation occurred.
    std::vector<bool> defined;

    bool all_defined() const noexcept;
};

/// Reusable scratch space for evaluating one Program in a hot loop.
/// Undefined results come back as NaN. Not thread-safe; use one per thread.
class Evaluator
{
public:
    explicit Evaluator(const Program &program);

    void run(std::span<const double> inputs, std::span<double> outputs);

    const Program &program() const noexcept { return *m_program; }

private:
    const Program *m_program;
    std::vector<double> m_slots;
};

EvalOutcome evaluate(const Program &p, std::span<const double> bindings);

// Row i of `rows` binds the inputs of sample i. Results are in row order and
// identical to calling evaluate() on each row.
std::vector<EvalOutcome> evaluate_batch(const Program &p, const Eigen::Ref<const RowMatrixXd> &rows);

} // namespace psens

#endif
