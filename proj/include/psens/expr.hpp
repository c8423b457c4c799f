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

#ifndef PSENS_EXPR_HPP
#define PSENS_EXPR_HPP

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace psens
{

// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

enum class Op : std::uint8_t { kConst, kVar, kAdd, kSub, kMul, kDiv, kNeg, kPow, kExp, kLn, kSqrt, kSigmoid };

int arity(Op op) noexcept;
std::string_view op_name(Op op) noexcept;

// Numerically stable logistic function.
inline double sigmoid(double x) noexcept
{
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Scalar semantics shared by constant folding and the evaluation tape.
// Domain violations (x/0, ln of x <= 0, sqrt of x < 0) and non-finite
// results are reported as quiet NaN; NaN operands propagate.
inline double eval_scalar(Op op, double lhs, double rhs, double exponent) noexcept
{
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    double r;
    switch (op) {
        case Op::kAdd: r = lhs + rhs; break;
        case Op::kSub: r = lhs - rhs; break;
        case Op::kMul: r = lhs * rhs; break;
        case Op::kDiv: r = rhs == 0.0 ? nan : lhs / rhs; break;
        case Op::kNeg: r = -lhs; break;
        case Op::kPow: r = std::isnan(lhs) ? nan : std::pow(lhs, exponent); break;
        case Op::kExp: r = std::exp(lhs); break;
        case Op::kLn: r = lhs > 0.0 ? std::log(lhs) : nan; break;
        case Op::kSqrt: r = lhs >= 0.0 ? std::sqrt(lhs) : nan; break;
        case Op::kSigmoid: r = sigmoid(lhs); break;
        default: r = nan; break;
    }
    return std::isfinite(r) ? r : nan;
}

/// Handle to a node of one ExprGraph. Ids are dense, assigned in creation
/// order, and carry the tag of the issuing graph so that foreign use is
/// detected.
class NodeId
{
public:
    NodeId() = default;

    std::uint32_t index() const noexcept { return m_index; }
    std::uint32_t graph_tag() const noexcept { return m_graph; }
    bool valid() const noexcept { return m_graph != 0; }

    friend bool operator==(NodeId, NodeId) = default;
    friend auto operator<=>(NodeId, NodeId) = default;

private:
    friend class ExprGraph;
    NodeId(std::uint32_t graph, std::uint32_t index) : m_graph(graph), m_index(index) {}

    std::uint32_t m_graph = 0;
    std::uint32_t m_index = 0;
};

struct Node {
    Op op;
    // Const: the value. Pow: the exponent. Otherwise 0.
    double payload = 0.0;
    // Var: index into the graph's variable table.
    std::uint32_t name = 0;
    // Child node indices; only the first arity(op) entries are meaningful.
    std::array<std::uint32_t, 2> children{0, 0};
};

struct GraphOptions {
    // Local algebraic simplification at construction. Interning is always on.
    bool simplify = true;
};

/// Append-only, hash-consed DAG of scalar expressions.
///
/// Every child index is strictly smaller than its parent's, so iterating
/// nodes by id is a topological order. Construction is single-writer; once
/// construction stops the graph may be read from any number of threads.
class ExprGraph
{
public:
    explicit ExprGraph(GraphOptions options = {});

    ExprGraph(const ExprGraph &) = delete;
    ExprGraph &operator=(const ExprGraph &) = delete;
    ExprGraph(ExprGraph &&) noexcept = default;
    ExprGraph &operator=(ExprGraph &&) noexcept = default;

    NodeId constant(double value);
    NodeId variable(std::string_view name);

    // Builds an operator node. `exponent` is only read for Op::kPow.
    NodeId apply(Op op, std::span<const NodeId> children, double exponent = 0.0);
    NodeId apply(Op op, std::initializer_list<NodeId> children, double exponent = 0.0)
    {
        return apply(op, std::span<const NodeId>(children.begin(), children.size()), exponent);
    }

    NodeId add(NodeId a, NodeId b) { return apply(Op::kAdd, {a, b}); }
    NodeId sub(NodeId a, NodeId b) { return apply(Op::kSub, {a, b}); }
    NodeId mul(NodeId a, NodeId b) { return apply(Op::kMul, {a, b}); }
    NodeId div(NodeId a, NodeId b) { return apply(Op::kDiv, {a, b}); }
    NodeId neg(NodeId a) { return apply(Op::kNeg, {a}); }
    NodeId pow(NodeId a, double exponent) { return apply(Op::kPow, {a}, exponent); }
    NodeId exp(NodeId a) { return apply(Op::kExp, {a}); }
    NodeId ln(NodeId a) { return apply(Op::kLn, {a}); }
    NodeId sqrt(NodeId a) { return apply(Op::kSqrt, {a}); }
    NodeId sigmoid(NodeId a) { return apply(Op::kSigmoid, {a}); }

    std::optional<NodeId> find_variable(std::string_view name) const;

    // Throws psens::Error if `id` was not issued by this graph.
    void check(NodeId id) const;

    const Node &node(NodeId id) const;
    NodeId child(NodeId id, int which) const;
    NodeId id_at(std::size_t index) const;
    std::size_t size() const noexcept { return m_nodes.size(); }

    bool is_constant(NodeId id) const { return node(id).op == Op::kConst; }
    bool is_constant(NodeId id, double value) const;
    std::string_view variable_name(NodeId id) const;

    // Names in registration order.
    const std::vector<std::string> &variable_names() const noexcept { return m_names; }

    bool simplifies() const noexcept { return m_options.simplify; }

private:
    struct Key {
        Op op;
        std::uint64_t payload_bits;
        std::uint32_t name;
        std::array<std::uint32_t, 2> children;
        friend bool operator==(const Key &, const Key &) = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key &k) const noexcept;
    };

    NodeId intern(const Node &n);
    std::optional<NodeId> simplify(Op op, std::span<const NodeId> children, double exponent);

    GraphOptions m_options;
    std::uint32_t m_tag;
    std::vector<Node> m_nodes;
    std::unordered_map<Key, std::uint32_t, KeyHash> m_interner;
    std::vector<std::string> m_names;
    std::unordered_map<std::string, std::uint32_t> m_var_index;
};

bool is_identifier(std::string_view name) noexcept;

} // namespace psens

#endif
