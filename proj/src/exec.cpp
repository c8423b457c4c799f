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

#include <psens/exec.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <psens/parse.hpp>

namespace psens
{

namespace
{

constexpr std::uint32_t kUnassigned = std::numeric_limits<std::uint32_t>::max();

std::string slot_name(std::uint32_t s)
{
    return "s" + std::to_string(s);
}

} // namespace

Program compile(const ExprGraph &g, std::span<const NamedNode> roots, std::span<const std::string> input_vars)
{
    Program p;
    p.m_inputs.assign(input_vars.begin(), input_vars.end());

    std::unordered_map<std::string_view, std::uint32_t> input_slot;
    for (std::size_t i = 0; i < input_vars.size(); ++i) {
        if (!input_slot.emplace(input_vars[i], static_cast<std::uint32_t>(i)).second) {
            throw Error("duplicate input variable '" + input_vars[i] + "'");
        }
    }

    // Mark the live sub-DAG with one descending sweep.
    std::size_t top = 0;
    for (const auto &[label, id] : roots) {
        g.check(id);
        top = std::max<std::size_t>(top, id.index() + 1);
    }
    std::vector<char> live(top, 0);
    for (const auto &[label, id] : roots) {
        live[id.index()] = 1;
    }
    for (std::size_t i = top; i-- > 0;) {
        if (!live[i]) {
            continue;
        }
        const Node &n = g.node(g.id_at(i));
        for (int c = 0; c < arity(n.op); ++c) {
            live[n.children[static_cast<std::size_t>(c)]] = 1;
        }
    }

    std::vector<std::uint32_t> slot(top, kUnassigned);
    std::uint32_t next = static_cast<std::uint32_t>(input_vars.size());

    for (std::size_t i = 0; i < top; ++i) {
        if (!live[i]) {
            continue;
        }
        const NodeId id = g.id_at(i);
        const Node &n = g.node(id);
        if (n.op == Op::kVar) {
            const std::string_view name = g.variable_name(id);
            auto it = input_slot.find(name);
            if (it == input_slot.end()) {
                throw Error("variable '" + std::string(name) + "' is used by the program but not listed as an input");
            }
            slot[i] = it->second;
        } else if (n.op == Op::kConst) {
            slot[i] = next++;
            p.m_constants.emplace_back(slot[i], n.payload);
        }
    }

    for (std::size_t i = 0; i < top; ++i) {
        if (!live[i]) {
            continue;
        }
        const Node &n = g.node(g.id_at(i));
        if (n.op == Op::kVar || n.op == Op::kConst) {
            continue;
        }
        Instruction ins{n.op, next, slot[n.children[0]], 0, n.payload};
        if (arity(n.op) == 2) {
            ins.rhs = slot[n.children[1]];
        }
        slot[i] = next++;
        p.m_code.push_back(ins);
    }

    p.m_slot_count = next;
    for (const auto &[label, id] : roots) {
        p.m_outputs.push_back(label);
        p.m_output_slots.push_back(slot[id.index()]);
    }
    return p;
}

std::string Program::dump() const
{
    std::string out;
    for (std::size_t i = 0; i < m_inputs.size(); ++i) {
        out += slot_name(static_cast<std::uint32_t>(i)) + " ← input(" + m_inputs[i] + ")\n";
    }
    for (const auto &[s, v] : m_constants) {
        out += slot_name(s) + " ← const(" + format_number(v) + ")\n";
    }
    for (const Instruction &ins : m_code) {
        out += slot_name(ins.out) + " ← " + std::string(op_name(ins.op)) + "(" + slot_name(ins.lhs);
        if (arity(ins.op) == 2) {
            out += ", " + slot_name(ins.rhs);
        } else if (ins.op == Op::kPow) {
            out += ", " + format_number(ins.exponent);
        }
        out += ")\n";
    }
    for (std::size_t i = 0; i < m_outputs.size(); ++i) {
        out += m_outputs[i] + " ← " + slot_name(m_output_slots[i]) + "\n";
    }
    return out;
}

bool EvalOutcome::all_defined() const noexcept
{
    return std::all_of(defined.begin(), defined.end(), [](bool d) { return d; });
}

Evaluator::Evaluator(const Program &program) : m_program(&program), m_slots(program.slot_count(), 0.0)
{
    for (const auto &[s, v] : program.constants()) {
        m_slots[s] = v;
    }
}

void Evaluator::run(std::span<const double> inputs, std::span<double> outputs)
{
    const Program &p = *m_program;
    if (inputs.size() != p.inputs().size()) {
        throw Error("expected " + std::to_string(p.inputs().size()) + " input values, got "
                    + std::to_string(inputs.size()));
    }
    if (outputs.size() != p.outputs().size()) {
        throw Error("output buffer has wrong size");
    }
    double *s = m_slots.data();
    std::copy(inputs.begin(), inputs.end(), s);
    for (const Instruction &ins : p.instructions()) {
        s[ins.out] = eval_scalar(ins.op, s[ins.lhs], s[ins.rhs], ins.exponent);
    }
    const auto out_slots = p.output_slots();
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const double v = s[out_slots[i]];
        outputs[i] = std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN();
    }
}

namespace
{

EvalOutcome outcome_from(const Eigen::VectorXd &values)
{
    EvalOutcome o;
    o.values = values;
    o.defined.resize(static_cast<std::size_t>(values.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        o.defined[static_cast<std::size_t>(i)] = std::isfinite(values[i]);
    }
    return o;
}

} // namespace

EvalOutcome evaluate(const Program &p, std::span<const double> bindings)
{
    Evaluator ev(p);
    Eigen::VectorXd values(static_cast<Eigen::Index>(p.outputs().size()));
    ev.run(bindings, std::span<double>(values.data(), static_cast<std::size_t>(values.size())));
    return outcome_from(values);
}

std::vector<EvalOutcome> evaluate_batch(const Program &p, const Eigen::Ref<const RowMatrixXd> &rows)
{
    std::vector<EvalOutcome> out;
    if (rows.rows() == 0) {
        return out;
    }
    if (static_cast<std::size_t>(rows.cols()) != p.inputs().size()) {
        throw Error("batch has " + std::to_string(rows.cols()) + " columns, program expects "
                    + std::to_string(p.inputs().size()));
    }
    out.reserve(static_cast<std::size_t>(rows.rows()));
    Evaluator ev(p);
    Eigen::VectorXd values(static_cast<Eigen::Index>(p.outputs().size()));
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        const double *row = rows.data() + r * rows.outerStride();
        ev.run(std::span<const double>(row, static_cast<std::size_t>(rows.cols())),
               std::span<double>(values.data(), static_cast<std::size_t>(values.size())));
        out.push_back(outcome_from(values));
    }
    return out;
}

} // namespace psens
