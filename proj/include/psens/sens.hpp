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

#ifndef PSENS_SENS_HPP
#define PSENS_SENS_HPP

#include <span>
#include <string>
#include <string_view>

#include <psens/diff.hpp>
#include <psens/expr.hpp>

namespace psens
{

// The two per-feature decompositions of the gradient norm phi = |grad f|_2.
//   kFractional: (df/dx_j) / phi, the normalised gradient (unit L2 norm).
//   kGradient:   d phi / dx_j, the gradient of the gradient norm.
// They agree only in special cases (e.g. an isotropic Hessian).
enum class PsVariant { kFractional, kGradient };

std::string_view to_string(PsVariant v) noexcept;
PsVariant parse_ps_variant(std::string_view text);

struct SensitivityBundle {
    NodeId function;
    GradientMap grad;
    NodeId grad_norm;
    NamedNodes ps_fractional;
    NamedNodes ps_gradient;

    const NamedNodes &partial_sensitivity(PsVariant v) const
    {
        return v == PsVariant::kFractional ? ps_fractional : ps_gradient;
    }
};

// sqrt(sum_i (df/dx_i)^2), summed in the order of `vars`.
NodeId gradient_norm(ExprGraph &g, NodeId f, std::span<const std::string> vars);
NodeId gradient_norm(ExprGraph &g, const GradientMap &grad);

NamedNodes partial_sensitivity_fractional(ExprGraph &g, NodeId f, std::span<const std::string> vars);

// Second-order construction: reverse mode applied to the gradient-norm node.
NamedNodes partial_sensitivity_gradient(ExprGraph &g, NodeId f, std::span<const std::string> vars);

SensitivityBundle sensitivity_bundle(ExprGraph &g, NodeId f, std::span<const std::string> vars);

} // namespace psens

#endif
