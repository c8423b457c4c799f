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

#include <charconv>
#include <cmath>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include <psens/parse.hpp>

#include "support/random_expr.hpp"

namespace psens
{
namespace
{

using testing::ReferenceInterpreter;

double eval_at(const ExprGraph &g, NodeId root, std::unordered_map<std::string, double> env)
{
    return ReferenceInterpreter(g, std::move(env))(root);
}

TEST(Parse, QueryExample)
{
    ExprGraph g;
    const auto r = parse_expression(g, "a^2 + exp(2*b - a)");
    EXPECT_EQ(r.variables, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(eval_at(g, r.root, {{"a", 1.0}, {"b", 0.5}}), 2.0);
}

TEST(Parse, SigmoidOfZeroFolds)
{
    ExprGraph g;
    const auto r = parse_expression(g, "sigmoid(0)");
    ASSERT_TRUE(g.is_constant(r.root));
    EXPECT_EQ(g.node(r.root).payload, 0.5);
    EXPECT_TRUE(r.variables.empty());
}

TEST(Parse, SyntaxErrorOffset)
{
    ExprGraph g;
    try {
        parse_expression(g, "a + * b");
        FAIL() << "expected a parse error";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.offset(), 4u);
        EXPECT_NE(std::string(e.what()).find("offset 4"), std::string::npos);
    }
}

TEST(Parse, Precedence)
{
    ExprGraph g;
    EXPECT_EQ(eval_at(g, parse_expression(g, "2+3*4").root, {}), 14.0);
    EXPECT_EQ(eval_at(g, parse_expression(g, "2*3^2").root, {}), 18.0);
    EXPECT_EQ(eval_at(g, parse_expression(g, "8-3-2").root, {}), 3.0);
    EXPECT_EQ(eval_at(g, parse_expression(g, "8/4/2").root, {}), 1.0);
    EXPECT_EQ(eval_at(g, parse_expression(g, "2^3^2").root, {}), 512.0);
}

TEST(Parse, UnaryMinusBindsLooserThanPower)
{
    ExprGraph g;
    const auto r = parse_expression(g, "-a^2");
    const Node &top = g.node(r.root);
    ASSERT_EQ(top.op, Op::kNeg);
    const Node &inner = g.node(g.child(r.root, 0));
    EXPECT_EQ(inner.op, Op::kPow);
    EXPECT_EQ(inner.payload, 2.0);
    EXPECT_EQ(eval_at(g, r.root, {{"a", 3.0}}), -9.0);
}

TEST(Parse, ExponentMustBeConstant)
{
    ExprGraph g;
    EXPECT_NO_THROW(parse_expression(g, "a^-2"));
    EXPECT_NO_THROW(parse_expression(g, "a^(1/2)"));
    EXPECT_THROW(parse_expression(g, "a^b"), ParseError);
}

TEST(Parse, Functions)
{
    ExprGraph g;
    const auto r = parse_expression(g, "ln(exp(x)) + sqrt(4)");
    EXPECT_DOUBLE_EQ(eval_at(g, r.root, {{"x", 0.25}}), 2.25);
    EXPECT_THROW(parse_expression(g, "exp + 1"), ParseError);
    EXPECT_THROW(parse_expression(g, "foo(1)"), ParseError);
    EXPECT_THROW(parse_expression(g, "exp(1, 2)"), ParseError);
}

TEST(Parse, Numbers)
{
    ExprGraph g;
    EXPECT_EQ(eval_at(g, parse_expression(g, "1.5e3").root, {}), 1500.0);
    EXPECT_EQ(eval_at(g, parse_expression(g, ".25").root, {}), 0.25);
    EXPECT_THROW(parse_expression(g, "1e999"), ParseError);
    EXPECT_THROW(parse_expression(g, "1e"), ParseError);
}

TEST(Parse, ErrorsCarryOffsets)
{
    ExprGraph g;
    struct Case {
        const char *src;
        std::size_t offset;
    };
    for (const Case &c : {Case{"a +", 3}, Case{"(a", 2}, Case{"a b", 2}, Case{"", 0}, Case{"a $ b", 2}}) {
        try {
            parse_expression(g, c.src);
            ADD_FAILURE() << "no error for '" << c.src << "'";
        } catch (const ParseError &e) {
            EXPECT_EQ(e.offset(), c.offset) << c.src;
        }
    }
}

TEST(Parse, DeepNestingIsRejectedNotCrashed)
{
    ExprGraph g;
    const std::string deep = std::string(10000, '(') + "a" + std::string(10000, ')');
    EXPECT_THROW(parse_expression(g, deep), ParseError);
}

TEST(Format, NumbersRoundTrip)
{
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, 2.0, 5e-324}) {
        const std::string s = format_number(v);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        EXPECT_EQ(back, v) << s;
    }
}

// Pretty-printing and re-parsing lands on the same interned node.
TEST(ParseProperty, RoundTripIdentity)
{
    std::mt19937_64 rng(404);
    ExprGraph g;
    for (int t = 0; t < 500; ++t) {
        auto recipe = testing::random_recipe(rng, 0, {});
        const NodeId root = testing::build(g, *recipe);
        const std::string text = format_expression(g, root);
        const auto again = parse_expression(g, text);
        ASSERT_EQ(again.root, root) << text;
    }
}

// Arbitrary bytes either parse or raise ParseError; nothing else escapes.
TEST(ParseProperty, FuzzNeverCrashes)
{
    std::mt19937_64 rng(505);
    static const std::string alphabet = "ab xyz0123456789.e+-*/^()_,sqrtlnexpigmod\t";
    int parsed = 0;
    for (int t = 0; t < 20000; ++t) {
        const std::size_t len = rng() % 24;
        std::string s;
        for (std::size_t i = 0; i < len; ++i) {
            s.push_back(t % 2 == 0 ? static_cast<char>(rng() % 256) : alphabet[rng() % alphabet.size()]);
        }
        ExprGraph g;
        try {
            parse_expression(g, s);
            ++parsed;
        } catch (const ParseError &e) {
            EXPECT_LE(e.offset(), s.size());
        }
    }
    EXPECT_GT(parsed, 0);
}

} // namespace
} // namespace psens
