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

#include <psens/sens.hpp>

namespace psens
{

std::string_view to_string(PsVariant v) noexcept
{
    return v == PsVariant::kFractional ? "fractional" : "gradient";
}

PsVariant parse_ps_variant(std::string_view text)
{
    if (text == "fractional") {
        return PsVariant::kFractional;
    }
    if (text == "gradient") {
        return PsVariant::kGradient;
    }
    throw Error("unknown partial-sensitivity variant '" + std::string(text) + "' (expected fractional or gradient)");
}

NodeId gradient_norm(ExprGraph &g, const GradientMap &grad)
{
    NodeId sum = g.constant(0.0);
    for (const auto &[name, d] : grad.entries) {
        sum = g.add(sum, g.pow(d, 2.0));
    }
    return g.sqrt(sum);
}

NodeId gradient_norm(ExprGraph &g, NodeId f, std::span<const std::string> vars)
{
    return gradient_norm(g, gradient(g, f, vars));
}

namespace
{

NamedNodes fractional_from(ExprGraph &g, const GradientMap &grad, NodeId norm)
{
    NamedNodes out;
    out.reserve(grad.size());
    for (const auto &[name, d] : grad.entries) {
        out.emplace_back(name, g.div(d, norm));
    }
    return out;
}

} // namespace

NamedNodes partial_sensitivity_fractional(ExprGraph &g, NodeId f, std::span<const std::string> vars)
{
    const GradientMap grad = gradient(g, f, vars);
    return fractional_from(g, grad, gradient_norm(g, grad));
}

NamedNodes partial_sensitivity_gradient(ExprGraph &g, NodeId f, std::span<const std::string> vars)
{
    return gradient(g, gradient_norm(g, f, vars), vars).entries;
}

SensitivityBundle sensitivity_bundle(ExprGraph &g, NodeId f, std::span<const std::string> vars)
{
    SensitivityBundle b;
    b.function = f;
    b.grad = gradient(g, f, vars);
    b.grad_norm = gradient_norm(g, b.grad);
    b.ps_fractional = fractional_from(g, b.grad, b.grad_norm);
    b.ps_gradient = gradient(g, b.grad_norm, vars).entries;
    return b;
}

} // namespace psens
