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

#ifndef PSENS_OPTIM_HPP
#define PSENS_OPTIM_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include <psens/exec.hpp>
#include <psens/expr.hpp>

namespace psens
{

/// Axis-aligned product of closed intervals, one per named variable.
class BoxDomain
{
public:
    BoxDomain(std::vector<std::string> names, Eigen::VectorXd lower, Eigen::VectorXd upper);

    Eigen::Index dim() const noexcept { return m_lower.size(); }
    const std::vector<std::string> &names() const noexcept { return m_names; }
    const Eigen::VectorXd &lower() const noexcept { return m_lower; }
    const Eigen::VectorXd &upper() const noexcept { return m_upper; }

    bool contains(const Eigen::Ref<const Eigen::VectorXd> &x) const;
    Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd> &x) const;

private:
    std::vector<std::string> m_names;
    Eigen::VectorXd m_lower;
    Eigen::VectorXd m_upper;
};

struct MaximizeConfig {
    int grid_per_dim = 33;
    int top_k = 8;
    int ascent_steps = 200;
    // Defaults to 0.1 * the smallest box width.
    std::optional<double> step_init;
    double tol = 1e-10;
};

struct MaxResult {
    Eigen::VectorXd argmax;
    double value = 0.0;
    std::size_t evaluations = 0;
    std::size_t seeds_used = 0;
};

/// Box-constrained global maximisation by lattice multistart:
///  1. evaluate the objective on the grid_per_dim^d lattice (corners included);
///  2. seed from the top_k lattice points;
///  3. run projected gradient ascent from each seed, halving the step on
///     every rejected move until it drops below tol;
///  4. return the best point seen.
/// Undefined objective values rank as -infinity. Ties are broken by lattice
/// index, then seed index.
MaxResult maximize(const Program &objective, const Program &objective_grad, const BoxDomain &box,
                   const MaximizeConfig &cfg = {});

/// Maximum gradient norm of `f` over `box`, i.e. its global L2-sensitivity.
/// The gradient of the gradient norm drives the ascent. `vars` must list the
/// box variables in box order.
MaxResult global_sensitivity(ExprGraph &g, NodeId f, std::span<const std::string> vars, const BoxDomain &box,
                             const MaximizeConfig &cfg = {});

} // namespace psens

#endif
