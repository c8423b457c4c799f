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

#include <bit>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <psens/exec.hpp>
#include <psens/parse.hpp>
#include <psens/sens.hpp>

#include "support/random_expr.hpp"

namespace psens
{
namespace
{

const std::vector<std::string> kAB{"a", "b"};

Program compile_one(const ExprGraph &g, NodeId root, std::span<const std::string> vars)
{
    const NamedNodes roots{{"f", root}};
    return compile(g, roots, vars);
}

bool same_bits(double x, double y)
{
    // All NaNs count as the same undefined marker.
    return (std::isnan(x) && std::isnan(y)) || std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
}

TEST(Compile, QueryGolden)
{
    ExprGraph g;
    const NodeId f = parse_expression(g, "a^2 + exp(2*b - a)").root;
    const Program p = compile_one(g, f, kAB);
    // pow, mul, sub, exp, add; the constant 2 lives in a slot.
    EXPECT_EQ(p.instructions().size(), 5u);
    EXPECT_EQ(p.slot_count(), 8u);
    EXPECT_EQ(p.dump(),
              "s0 ← input(a)\n"
              "s1 ← input(b)\n"
              "s2 ← const(2)\n"
              "s3 ← pow(s0, 2)\n"
              "s4 ← mul(s2, s1)\n"
              "s5 ← sub(s4, s0)\n"
              "s6 ← exp(s5)\n"
              "s7 ← add(s3, s6)\n"
              "f ← s7\n");
}

TEST(Compile, BareVariableIsPassThrough)
{
    ExprGraph g;
    const std::vector<std::string> vars{"x"};
    const Program p = compile_one(g, g.variable("x"), vars);
    EXPECT_TRUE(p.instructions().empty());
    const EvalOutcome out = evaluate(p, std::vector<double>{3.25});
    EXPECT_EQ(out.values[0], 3.25);
}

TEST(Compile, MissingVariableIsNamed)
{
    ExprGraph g;
    const NodeId f = parse_expression(g, "a + b*c").root;
    try {
        compile_one(g, f, kAB);
        FAIL() << "expected an error";
    } catch (const Error &e) {
        EXPECT_NE(std::string(e.what()).find("'c'"), std::string::npos) << e.what();
    }
}

TEST(Compile, RejectsDuplicateInputsAndForeignRoots)
{
    ExprGraph g;
    ExprGraph other;
    const NodeId f = parse_expression(g, "a").root;
    const std::vector<std::string> dup{"a", "a"};
    EXPECT_THROW(compile_one(g, f, dup), Error);
    EXPECT_THROW(compile_one(g, other.variable("a"), kAB), Error);
}

TEST(Compile, IsDeterministic)
{
    auto build = [] {
        ExprGraph g;
        const NodeId f = parse_expression(g, "sigmoid(a*b) + ln(a) - b^3").root;
        return compile_one(g, f, kAB);
    };
    EXPECT_EQ(build(), build());
}

TEST(Evaluate, Examples)
{
    ExprGraph g;
    const Program q = compile_one(g, parse_expression(g, "a^2 + exp(2*b - a)").root, kAB);
    const EvalOutcome r = evaluate(q, std::vector<double>{1.0, 0.5});
    EXPECT_EQ(r.values[0], 2.0);
    EXPECT_TRUE(r.all_defined());

    const std::vector<std::string> x{"x"};
    const Program inv = compile_one(g, parse_expression(g, "1/x").root, x);
    const EvalOutcome bad = evaluate(inv, std::vector<double>{0.0});
    EXPECT_FALSE(bad.defined[0]);
    EXPECT_FALSE(bad.all_defined());

    const Program sig = compile_one(g, parse_expression(g, "sigmoid(x)").root, x);
    EXPECT_EQ(evaluate(sig, std::vector<double>{0.0}).values[0], 0.5);
}

TEST(Evaluate, UndefinedPropagates)
{
    ExprGraph g;
    const std::vector<std::string> x{"x"};
    const Program p = compile_one(g, parse_expression(g, "sqrt(x) + 1").root, x);
    EXPECT_FALSE(evaluate(p, std::vector<double>{-1.0}).defined[0]);
    EXPECT_TRUE(evaluate(p, std::vector<double>{0.0}).defined[0]);
}

TEST(Evaluate, RejectsWrongBindingCount)
{
    ExprGraph g;
    const Program p = compile_one(g, parse_expression(g, "a + b").root, kAB);
    EXPECT_THROW(evaluate(p, std::vector<double>{1.0}), Error);
}

TEST(EvaluateBatch, MatchesRowWise)
{
    ExprGraph g;
    const Program p = compile_one(g, parse_expression(g, "a^2 + exp(2*b - a)").root, kAB);
    RowMatrixXd rows(3, 2);
    rows << 1.0, 0.5, 2.0, 3.0, 1.5, 0.75;
    const auto outs = evaluate_batch(p, rows);
    ASSERT_EQ(outs.size(), 3u);
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        const std::vector<double> row{rows(r, 0), rows(r, 1)};
        EXPECT_TRUE(same_bits(outs[static_cast<std::size_t>(r)].values[0], evaluate(p, row).values[0]));
    }
}

TEST(EvaluateBatch, Empty)
{
    ExprGraph g;
    const Program p = compile_one(g, parse_expression(g, "a + b").root, kAB);
    EXPECT_TRUE(evaluate_batch(p, RowMatrixXd(0, 2)).empty());
    EXPECT_THROW(evaluate_batch(p, RowMatrixXd(2, 3)), Error);
}

// The partial-sensitivity bundle shares subterms between phi and its
// gradient, so one tape is smaller than compiling each output on its own.
TEST(Compile, BundleSharesWork)
{
    ExprGraph g;
    const NodeId f = parse_expression(g, "a^2 + exp(2*b - a)").root;
    const SensitivityBundle b = sensitivity_bundle(g, f, kAB);
    NamedNodes all{{"grad_norm", b.grad_norm}};
    all.insert(all.end(), b.ps_gradient.begin(), b.ps_gradient.end());
    const std::size_t together = compile(g, all, kAB).instructions().size();
    std::size_t separate = 0;
    for (const auto &root : all) {
        separate += compile(g, std::span<const NamedNode>(&root, 1), kAB).instructions().size();
    }
    EXPECT_LT(together, separate);
}

// The tape against a direct recursive walk of the graph, bit for bit, with
// undefined results on both sides treated as equal.
TEST(ExecProperty, TapeMatchesReferenceInterpreter)
{
    std::mt19937_64 rng(1111);
    std::uniform_real_distribution<double> bind(-3.0, 3.0);
    const std::vector<std::string> vars{"x", "y", "z"};
    int defined = 0;
    for (int t = 0; t < 1000; ++t) {
        ExprGraph g(GraphOptions{.simplify = t % 2 == 0});
        auto r = testing::random_recipe(rng, 0, {});
        const NodeId f = testing::build(g, *r);
        const Program p = compile_one(g, f, vars);
        const std::vector<double> in{bind(rng), bind(rng), bind(rng)};
        const double got = evaluate(p, in).values[0];
        const double want = testing::ReferenceInterpreter(g, {{"x", in[0]}, {"y", in[1]}, {"z", in[2]}})(f);
        ASSERT_TRUE(same_bits(got, want)) << format_expression(g, f) << " got " << got << " want " << want;
        defined += std::isnan(want) ? 0 : 1;
    }
    EXPECT_GT(defined, 500);
}

// Reusing one Evaluator across rows gives the same bits as fresh runs.
TEST(ExecProperty, EvaluatorReuseIsStateless)
{
    ExprGraph g;
    const Program p = compile_one(g, parse_expression(g, "ln(a) * sigmoid(b) / (a - b)").root, kAB);
    Evaluator ev(p);
    std::mt19937_64 rng(1212);
    std::uniform_real_distribution<double> bind(-2.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        const std::vector<double> in{bind(rng), bind(rng)};
        double out = 0.0;
        ev.run(in, std::span<double>(&out, 1));
        ASSERT_TRUE(same_bits(out, evaluate(p, in).values[0]));
    }
}

} // namespace
} // namespace psens
