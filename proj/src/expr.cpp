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

#include <psens/expr.hpp>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>

namespace psens
{

namespace
{

std::atomic<std::uint32_t> g_next_tag{1};

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

} // namespace

int arity(Op op) noexcept
{
    switch (op) {
        case Op::kConst:
        case Op::kVar:
            return 0;
        case Op::kAdd:
        case Op::kSub:
        case Op::kMul:
        case Op::kDiv:
            return 2;
        default:
            return 1;
    }
}

std::string_view op_name(Op op) noexcept
{
    switch (op) {
        case Op::kConst: return "const";
        case Op::kVar: return "var";
        case Op::kAdd: return "add";
        case Op::kSub: return "sub";
        case Op::kMul: return "mul";
        case Op::kDiv: return "div";
        case Op::kNeg: return "neg";
        case Op::kPow: return "pow";
        case Op::kExp: return "exp";
        case Op::kLn: return "ln";
        case Op::kSqrt: return "sqrt";
        case Op::kSigmoid: return "sigmoid";
    }
    return "?";
}

bool is_identifier(std::string_view name) noexcept
{
    if (name.empty()) {
        return false;
    }
    auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    auto digit = [](char c) { return c >= '0' && c <= '9'; };
    if (!alpha(name.front())) {
        return false;
    }
    return std::all_of(name.begin(), name.end(), [&](char c) { return alpha(c) || digit(c); });
}

std::size_t ExprGraph::KeyHash::operator()(const Key &k) const noexcept
{
    std::uint64_t h = mix64(static_cast<std::uint64_t>(k.op) + 0x9e3779b97f4a7c15ULL);
    h = mix64(h ^ k.payload_bits);
    h = mix64(h ^ k.name);
    h = mix64(h ^ (static_cast<std::uint64_t>(k.children[0]) << 32 | k.children[1]));
    return static_cast<std::size_t>(h);
}

ExprGraph::ExprGraph(GraphOptions options) : m_options(options), m_tag(g_next_tag.fetch_add(1)) {}

void ExprGraph::check(NodeId id) const
{
    if (id.graph_tag() != m_tag || id.index() >= m_nodes.size()) {
        throw Error("node id does not belong to this expression graph");
    }
}

const Node &ExprGraph::node(NodeId id) const
{
    check(id);
    return m_nodes[id.index()];
}

NodeId ExprGraph::child(NodeId id, int which) const
{
    const Node &n = node(id);
    if (which < 0 || which >= arity(n.op)) {
        throw Error("child index out of range for " + std::string(op_name(n.op)));
    }
    return NodeId(m_tag, n.children[static_cast<std::size_t>(which)]);
}

NodeId ExprGraph::id_at(std::size_t index) const
{
    if (index >= m_nodes.size()) {
        throw Error("node index out of range");
    }
    return NodeId(m_tag, static_cast<std::uint32_t>(index));
}

bool ExprGraph::is_constant(NodeId id, double value) const
{
    const Node &n = node(id);
    return n.op == Op::kConst && n.payload == value;
}

std::string_view ExprGraph::variable_name(NodeId id) const
{
    const Node &n = node(id);
    if (n.op != Op::kVar) {
        throw Error("node is not a variable");
    }
    return m_names[n.name];
}

std::optional<NodeId> ExprGraph::find_variable(std::string_view name) const
{
    auto it = m_var_index.find(std::string(name));
    if (it == m_var_index.end()) {
        return std::nullopt;
    }
    return NodeId(m_tag, it->second);
}

NodeId ExprGraph::intern(const Node &n)
{
    const Key key{n.op, std::bit_cast<std::uint64_t>(n.payload), n.name, n.children};
    auto [it, inserted] = m_interner.try_emplace(key, static_cast<std::uint32_t>(m_nodes.size()));
    if (inserted) {
        if (m_nodes.size() >= std::numeric_limits<std::uint32_t>::max()) {
            throw Error("expression graph is full");
        }
        m_nodes.push_back(n);
    }
    return NodeId(m_tag, it->second);
}

NodeId ExprGraph::constant(double value)
{
    if (!std::isfinite(value)) {
        throw Error("constant must be finite");
    }
    // +0.0 and -0.0 are one constant.
    if (value == 0.0) {
        value = 0.0;
    }
    Node n{Op::kConst};
    n.payload = value;
    return intern(n);
}

NodeId ExprGraph::variable(std::string_view name)
{
    if (!is_identifier(name)) {
        throw Error("malformed variable name '" + std::string(name) + "'");
    }
    if (auto existing = find_variable(name)) {
        return *existing;
    }
    Node n{Op::kVar};
    n.name = static_cast<std::uint32_t>(m_names.size());
    m_names.emplace_back(name);
    const NodeId id = intern(n);
    m_var_index.emplace(m_names.back(), id.index());
    return id;
}

std::optional<NodeId> ExprGraph::simplify(Op op, std::span<const NodeId> c, double exponent)
{
    const Node &x = m_nodes[c[0].index()];
    const Node *y = c.size() > 1 ? &m_nodes[c[1].index()] : nullptr;

    const bool all_const = x.op == Op::kConst && (y == nullptr || y->op == Op::kConst);
    if (all_const) {
        const double v = eval_scalar(op, x.payload, y ? y->payload : 0.0, exponent);
        if (!std::isnan(v)) {
            return constant(v);
        }
        // Folding would hide a domain violation; keep the node.
        return std::nullopt;
    }

    auto is = [](const Node *n, double v) { return n->op == Op::kConst && n->payload == v; };
    switch (op) {
        case Op::kAdd:
            if (is(y, 0.0)) return c[0];
            if (is(&x, 0.0)) return c[1];
            break;
        case Op::kSub:
            if (c[0] == c[1]) return constant(0.0);
            if (is(y, 0.0)) return c[0];
            break;
        case Op::kMul:
            if (is(y, 1.0)) return c[0];
            if (is(&x, 1.0)) return c[1];
            if (is(y, 0.0) || is(&x, 0.0)) return constant(0.0);
            break;
        case Op::kDiv:
            if (is(y, 1.0)) return c[0];
            break;
        case Op::kPow:
            if (exponent == 1.0) return c[0];
            if (exponent == 0.0) return constant(1.0);
            break;
        case Op::kNeg:
            if (x.op == Op::kNeg) return NodeId(m_tag, x.children[0]);
            break;
        default:
            break;
    }
    return std::nullopt;
}

NodeId ExprGraph::apply(Op op, std::span<const NodeId> children, double exponent)
{
    if (op == Op::kConst || op == Op::kVar) {
        throw Error("use constant() or variable() to create leaf nodes");
    }
    if (static_cast<int>(children.size()) != arity(op)) {
        throw Error("arity mismatch for " + std::string(op_name(op)) + ": expected " + std::to_string(arity(op))
                    + ", got " + std::to_string(children.size()));
    }
    for (NodeId id : children) {
        check(id);
    }
    if (op == Op::kPow) {
        if (!std::isfinite(exponent)) {
            throw Error("pow exponent must be finite");
        }
        if (exponent == 0.0) {
            exponent = 0.0;
        }
    } else {
        exponent = 0.0;
    }

    if (m_options.simplify) {
        if (auto s = simplify(op, children, exponent)) {
            return *s;
        }
    }

    Node n{op};
    n.payload = exponent;
    for (std::size_t i = 0; i < children.size(); ++i) {
        n.children[i] = children[i].index();
    }
    return intern(n);
}

} // namespace psens
