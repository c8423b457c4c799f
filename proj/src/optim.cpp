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

#include <psens/optim.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <psens/sens.hpp>

namespace psens
{

BoxDomain::BoxDomain(std::vector<std::string> names, Eigen::VectorXd lower, Eigen::VectorXd upper)
    : m_names(std::move(names)), m_lower(std::move(lower)), m_upper(std::move(upper))
{
    if (static_cast<Eigen::Index>(m_names.size()) != m_lower.size() || m_lower.size() != m_upper.size()) {
        throw Error("box domain: names and bounds differ in length");
    }
    for (Eigen::Index i = 0; i < m_lower.size(); ++i) {
        const auto &name = m_names[static_cast<std::size_t>(i)];
        if (!std::isfinite(m_lower[i]) || !std::isfinite(m_upper[i])) {
            throw Error("box domain: bounds of '" + name + "' must be finite");
        }
        if (m_lower[i] > m_upper[i]) {
            throw Error("box domain: lower bound of '" + name + "' exceeds upper bound");
        }
    }
}

bool BoxDomain::contains(const Eigen::Ref<const Eigen::VectorXd> &x) const
{
    return x.size() == dim() && (x.array() >= m_lower.array()).all() && (x.array() <= m_upper.array()).all();
}

Eigen::VectorXd BoxDomain::project(const Eigen::Ref<const Eigen::VectorXd> &x) const
{
    return x.cwiseMax(m_lower).cwiseMin(m_upper);
}

namespace
{

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

class Objective
{
public:
    Objective(const Program &value, const Program &grad, std::size_t &counter)
        : m_value(value), m_grad(grad), m_counter(counter), m_grad_out(grad.outputs().size())
    {
    }

    double value(const Eigen::VectorXd &x)
    {
        ++m_counter;
        double out = 0.0;
        m_value.run(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), std::span<double>(&out, 1));
        return std::isnan(out) ? kMinusInf : out;
    }

    // Returns false when any gradient component is undefined.
    bool gradient(const Eigen::VectorXd &x, Eigen::VectorXd &g)
    {
        m_grad.run(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), m_grad_out);
        g = Eigen::Map<const Eigen::VectorXd>(m_grad_out.data(), static_cast<Eigen::Index>(m_grad_out.size()));
        return g.allFinite();
    }

private:
    Evaluator m_value;
    Evaluator m_grad;
    std::size_t &m_counter;
    std::vector<double> m_grad_out;
};

Eigen::VectorXd lattice_point(const BoxDomain &box, std::size_t index, int per_dim)
{
    // First variable varies slowest.
    Eigen::VectorXd x(box.dim());
    for (Eigen::Index k = box.dim(); k-- > 0;) {
        const auto i = static_cast<int>(index % static_cast<std::size_t>(per_dim));
        index /= static_cast<std::size_t>(per_dim);
        const double t = static_cast<double>(i) / (per_dim - 1);
        x[k] = i == per_dim - 1 ? box.upper()[k] : box.lower()[k] + t * (box.upper()[k] - box.lower()[k]);
    }
    return x;
}

} // namespace

MaxResult maximize(const Program &objective, const Program &objective_grad, const BoxDomain &box,
                   const MaximizeConfig &cfg)
{
    if (objective.outputs().size() != 1) {
        throw Error("objective program must have exactly one output");
    }
    if (objective.inputs() != box.names() || objective_grad.inputs() != box.names()) {
        throw Error("objective and gradient inputs must match the box variables in order");
    }
    if (static_cast<Eigen::Index>(objective_grad.outputs().size()) != box.dim()) {
        throw Error("gradient program must have one output per box variable");
    }
    if (cfg.grid_per_dim < 2) {
        throw Error("grid_per_dim must be at least 2");
    }
    if (cfg.top_k < 0 || cfg.ascent_steps < 0 || !(cfg.tol > 0.0)) {
        throw Error("invalid maximizer configuration");
    }

    const double lattice_size = std::pow(static_cast<double>(cfg.grid_per_dim), static_cast<double>(box.dim()));
    if (lattice_size > 1e8) {
        throw Error("lattice of " + std::to_string(lattice_size) + " points is too large");
    }
    const auto n_lattice = static_cast<std::size_t>(lattice_size);

    MaxResult result;
    Objective obj(objective, objective_grad, result.evaluations);

    std::vector<double> values(n_lattice);
    for (std::size_t i = 0; i < n_lattice; ++i) {
        values[i] = obj.value(lattice_point(box, i, cfg.grid_per_dim));
    }
    std::vector<std::size_t> order(n_lattice);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

    double best = values[order.front()];
    Eigen::VectorXd best_x = lattice_point(box, order.front(), cfg.grid_per_dim);

    const double step_init = cfg.step_init.value_or(0.1 * (box.upper() - box.lower()).minCoeff());
    const std::size_t seeds = std::min<std::size_t>(static_cast<std::size_t>(cfg.top_k), n_lattice);
    Eigen::VectorXd grad(box.dim());
    for (std::size_t s = 0; s < seeds; ++s) {
        if (values[order[s]] == kMinusInf) {
            break;
        }
        ++result.seeds_used;
        Eigen::VectorXd x = lattice_point(box, order[s], cfg.grid_per_dim);
        double fx = values[order[s]];
        double step = step_init;
        for (int it = 0; it < cfg.ascent_steps && step >= cfg.tol; ++it) {
            if (!obj.gradient(x, grad)) {
                break;
            }
            const Eigen::VectorXd candidate = box.project(x + step * grad);
            const double fc = obj.value(candidate);
            if (fc > fx) {
                x = candidate;
                fx = fc;
            } else {
                step *= 0.5;
            }
        }
        if (fx > best) {
            best = fx;
            best_x = x;
        }
    }

    result.argmax = best_x;
    result.value = best;
    if (best != kMinusInf) {
        const double check = obj.value(best_x);
        if (check != best) {
            throw Error("maximize: objective is not reproducible at the returned argmax");
        }
    }
    return result;
}

MaxResult global_sensitivity(ExprGraph &g, NodeId f, std::span<const std::string> vars, const BoxDomain &box,
                             const MaximizeConfig &cfg)
{
    if (!std::equal(vars.begin(), vars.end(), box.names().begin(), box.names().end())) {
        throw Error("global_sensitivity: variables must match the box variables in order");
    }
    const SensitivityBundle b = sensitivity_bundle(g, f, vars);
    const NamedNode norm_root{"grad_norm", b.grad_norm};
    const Program objective = compile(g, std::span<const NamedNode>(&norm_root, 1), vars);
    const Program grad = compile(g, b.ps_gradient, vars);
    return maximize(objective, grad, box, cfg);
}

} // namespace psens
