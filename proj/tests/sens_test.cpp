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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <psens/parse.hpp>
#include <psens/sens.hpp>

#include "support/random_expr.hpp"

namespace psens
{
namespace
{

using Env = std::unordered_map<std::string, double>;

std::vector<double> eval_all(const ExprGraph &g, const NamedNodes &nodes, const Env &env)
{
    testing::ReferenceInterpreter interp(g, env);
    std::vector<double> out;
    for (const auto &[name, id] : nodes) {
        out.push_back(interp(id));
    }
    return out;
}

double eval_at(const ExprGraph &g, NodeId id, const Env &env)
{
    return testing::ReferenceInterpreter(g, env)(id);
}

struct Query {
    ExprGraph g;
    NodeId f;
    std::vector<std::string> vars;
};

Query make(const char *src)
{
    Query q;
    const auto r = parse_expression(q.g, src);
    q.f = r.root;
    q.vars = r.variables;
    return q;
}

TEST(GradientNorm, Examples)
{
    {
        Query q = make("a + b");
        const NodeId phi = gradient_norm(q.g, q.f, q.vars);
        EXPECT_TRUE(q.g.is_constant(phi));
        EXPECT_EQ(q.g.node(phi).payload, std::sqrt(2.0));
    }
    {
        Query q = make("a^2 + exp(2*b - a)");
        const NodeId phi = gradient_norm(q.g, q.f, q.vars);
        EXPECT_EQ(eval_at(q.g, phi, {{"a", 1.0}, {"b", 0.5}}), std::sqrt(5.0));
    }
    {
        Query q = make("a^2 + b^2");
        EXPECT_EQ(eval_at(q.g, gradient_norm(q.g, q.f, q.vars), {{"a", 3.0}, {"b", 4.0}}), 10.0);
    }
}

TEST(Fractional, Examples)
{
    {
        Query q = make("a + b");
        const auto ps = eval_all(q.g, partial_sensitivity_fractional(q.g, q.f, q.vars), {{"a", 9.0}, {"b", -2.0}});
        EXPECT_DOUBLE_EQ(ps[0], 1 / std::sqrt(2.0));
        EXPECT_DOUBLE_EQ(ps[1], 1 / std::sqrt(2.0));
    }
    {
        Query q = make("a^2 + exp(2*b - a)");
        const auto ps = eval_all(q.g, partial_sensitivity_fractional(q.g, q.f, q.vars), {{"a", 1.0}, {"b", 0.5}});
        EXPECT_NEAR(ps[0], 0.4472136, 1e-7);
        EXPECT_NEAR(ps[1], 0.8944272, 1e-7);
    }
    {
        Query q = make("a^2 + b^2");
        const auto ps = eval_all(q.g, partial_sensitivity_fractional(q.g, q.f, q.vars), {{"a", 3.0}, {"b", 4.0}});
        EXPECT_DOUBLE_EQ(ps[0], 0.6);
        EXPECT_DOUBLE_EQ(ps[1], 0.8);
    }
}

TEST(GradientVariant, Examples)
{
    {
        Query q = make("a + b");
        const NamedNodes ps = partial_sensitivity_gradient(q.g, q.f, q.vars);
        EXPECT_EQ(ps[0].second, q.g.constant(0.0));
        EXPECT_EQ(ps[1].second, q.g.constant(0.0));
    }
    {
        Query q = make("a^2 + b^2");
        const auto ps = eval_all(q.g, partial_sensitivity_gradient(q.g, q.f, q.vars), {{"a", 3.0}, {"b", 4.0}});
        EXPECT_DOUBLE_EQ(ps[0], 1.2);
        EXPECT_DOUBLE_EQ(ps[1], 1.6);
    }
}

// phi = sqrt((2a - E)^2 + 4E^2) with E = exp(2b - a). Worked by hand at
// (1, 0.5): E = 1, so d phi/da = (1*3 - 4)/sqrt5 and d phi/db = (-2 + 8)/sqrt5.
// Central differences of phi are checked against the closed form first.
TEST(GradientVariant, QueryPointAgreesWithHandDerivation)
{
    Query q = make("a^2 + exp(2*b - a)");
    const NodeId phi = gradient_norm(q.g, q.f, q.vars);
    const double want_a = -1.0 / std::sqrt(5.0);
    const double want_b = 6.0 / std::sqrt(5.0);

    const double h = 1e-6;
    const double fd_a = (eval_at(q.g, phi, {{"a", 1 + h}, {"b", 0.5}}) - eval_at(q.g, phi, {{"a", 1 - h}, {"b", 0.5}}))
                        / (2 * h);
    const double fd_b = (eval_at(q.g, phi, {{"a", 1.0}, {"b", 0.5 + h}}) - eval_at(q.g, phi, {{"a", 1.0}, {"b", 0.5 - h}}))
                        / (2 * h);
    ASSERT_NEAR(fd_a, want_a, 1e-8);
    ASSERT_NEAR(fd_b, want_b, 1e-8);

    const auto ps = eval_all(q.g, partial_sensitivity_gradient(q.g, q.f, q.vars), {{"a", 1.0}, {"b", 0.5}});
    EXPECT_NEAR(ps[0], -0.4472136, 1e-7);
    EXPECT_NEAR(ps[1], 2.6832816, 1e-7);
    EXPECT_NEAR(ps[0], want_a, 1e-14);
    EXPECT_NEAR(ps[1], want_b, 1e-14);
}

TEST(Bundle, SharesNodesAndSelectsVariant)
{
    Query q = make("a^2 + exp(2*b - a)");
    const SensitivityBundle b = sensitivity_bundle(q.g, q.f, q.vars);
    EXPECT_EQ(b.function, q.f);
    EXPECT_EQ(b.grad_norm, gradient_norm(q.g, b.grad));
    EXPECT_EQ(&b.partial_sensitivity(PsVariant::kFractional), &b.ps_fractional);
    EXPECT_EQ(&b.partial_sensitivity(PsVariant::kGradient), &b.ps_gradient);
    EXPECT_EQ(b.ps_fractional[1].second, partial_sensitivity_fractional(q.g, q.f, q.vars)[1].second);
}

TEST(Variant, Names)
{
    EXPECT_EQ(parse_ps_variant("fractional"), PsVariant::kFractional);
    EXPECT_EQ(parse_ps_variant("gradient"), PsVariant::kGradient);
    EXPECT_EQ(to_string(PsVariant::kGradient), "gradient");
    EXPECT_THROW(parse_ps_variant("eq6"), Error);
}

TEST(Fractional, UndefinedAtZeroGradient)
{
    Query q = make("a^2 + b^2");
    const auto ps = eval_all(q.g, partial_sensitivity_fractional(q.g, q.f, q.vars), {{"a", 0.0}, {"b", 0.0}});
    EXPECT_TRUE(std::isnan(ps[0]));
    EXPECT_TRUE(std::isnan(ps[1]));
}

// Wherever phi > 1e-8 the fractional vector has unit length.
TEST(SensProperty, FractionalHasUnitNorm)
{
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> pick(-2.0, 2.0);
    int checked = 0;
    for (int t = 0; t < 40; ++t) {
        ExprGraph g;
        auto r = testing::random_recipe(rng, 0, testing::RecipeOptions{.max_depth = 5});
        const NodeId f = testing::build(g, *r);
        const std::vector<std::string> vars{"x", "y", "z"};
        for (const auto &v : vars) {
            g.variable(v);
        }
        const SensitivityBundle b = sensitivity_bundle(g, f, vars);
        for (int p = 0; p < 25; ++p) {
            const Env at{{"x", pick(rng)}, {"y", pick(rng)}, {"z", pick(rng)}};
            const double phi = eval_at(g, b.grad_norm, at);
            if (!(phi > 1e-8)) {
                continue;
            }
            const auto ps = eval_all(g, b.ps_fractional, at);
            double sq = 0.0;
            for (double v : ps) {
                sq += v * v;
            }
            ASSERT_NEAR(std::sqrt(sq), 1.0, 1e-9) << format_expression(g, f);
            ++checked;
        }
    }
    EXPECT_GT(checked, 200);
}

// ps_gradient against central differences of phi (h = 1e-6) where phi > 1e-3.
TEST(SensProperty, GradientVariantMatchesFiniteDifferences)
{
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> in_box(0.5, 1.5);
    const double h = 1e-6;
    const std::vector<std::string> vars{"x", "y", "z"};
    int checked = 0;
    for (int t = 0; t < 10; ++t) {
        ExprGraph g;
        auto r = testing::random_recipe(rng, 0, testing::RecipeOptions{.max_depth = 4, .smooth_only = true});
        const NodeId f = testing::build(g, *r);
        for (const auto &v : vars) {
            g.variable(v);
        }
        const SensitivityBundle b = sensitivity_bundle(g, f, vars);
        for (int p = 0; p < 10; ++p) {
            const Env at{{"x", in_box(rng)}, {"y", in_box(rng)}, {"z", in_box(rng)}};
            if (!(eval_at(g, b.grad_norm, at) > 1e-3)) {
                continue;
            }
            const auto ps = eval_all(g, b.ps_gradient, at);
            for (std::size_t k = 0; k < vars.size(); ++k) {
                Env up = at, down = at;
                up[vars[k]] += h;
                down[vars[k]] -= h;
                const double fd = (eval_at(g, b.grad_norm, up) - eval_at(g, b.grad_norm, down)) / (2 * h);
                ASSERT_LE(std::abs(ps[k] - fd), std::max(1e-4 * std::abs(fd), 1e-7))
                    << format_expression(g, f) << " var " << vars[k];
            }
            ++checked;
        }
    }
    EXPECT_GT(checked, 50);
}

// For a^2 + b^2 the Hessian is isotropic and the variants are parallel.
TEST(SensProperty, VariantsParallelForIsotropicHessian)
{
    Query q = make("a^2 + b^2");
    const SensitivityBundle b = sensitivity_bundle(q.g, q.f, q.vars);
    std::mt19937_64 rng(1010);
    std::uniform_real_distribution<double> pick(-5.0, 5.0);
    for (int p = 0; p < 100; ++p) {
        const Env at{{"a", pick(rng)}, {"b", pick(rng)}};
        const auto u = eval_all(q.g, b.ps_fractional, at);
        const auto v = eval_all(q.g, b.ps_gradient, at);
        const double cosine = (u[0] * v[0] + u[1] * v[1]) / (std::hypot(u[0], u[1]) * std::hypot(v[0], v[1]));
        ASSERT_GE(cosine, 1 - 1e-10);
    }
}

} // namespace
} // namespace psens
