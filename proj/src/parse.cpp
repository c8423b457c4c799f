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

#include <psens/parse.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <system_error>

namespace psens
{

ParseError::ParseError(std::size_t offset, std::string message)
    : Error("offset " + std::to_string(offset) + ": " + message), m_offset(offset), m_message(std::move(message))
{
}

namespace
{

constexpr int kMaxDepth = 200;

struct Function {
    std::string_view name;
    Op op;
};

constexpr std::array<Function, 4> kFunctions{{
    {"exp", Op::kExp},
    {"ln", Op::kLn},
    {"sqrt", Op::kSqrt},
    {"sigmoid", Op::kSigmoid},
}};

bool is_digit(char c)
{
    return c >= '0' && c <= '9';
}

bool is_ident_start(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

bool is_space(char c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

// Recursive descent, one method per precedence level:
//   expr  := term (('+' | '-') term)*
//   term  := unary (('*' | '/') unary)*
//   unary := '-' unary | power
//   power := primary ('^' unary)?
class Parser
{
public:
    Parser(ExprGraph &g, std::string_view src) : m_graph(g), m_src(src) {}

    ParseResult run()
    {
        skip_space();
        if (at_end()) {
            throw ParseError(m_pos, "expected expression, found end of input");
        }
        ParseResult result;
        result.root = expr();
        skip_space();
        if (!at_end()) {
            throw ParseError(m_pos, std::string("expected operator or end of input, found '") + m_src[m_pos] + "'");
        }
        result.variables = std::move(m_variables);
        return result;
    }

private:
    bool at_end() const { return m_pos >= m_src.size(); }

    void skip_space()
    {
        while (!at_end() && is_space(m_src[m_pos])) {
            ++m_pos;
        }
    }

    bool accept(char c)
    {
        skip_space();
        if (!at_end() && m_src[m_pos] == c) {
            ++m_pos;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) {
            throw ParseError(m_pos, std::string("expected '") + c + "', found " + describe_here());
        }
    }

    std::string describe_here() const
    {
        if (at_end()) {
            return "end of input";
        }
        const auto c = static_cast<unsigned char>(m_src[m_pos]);
        if (c < 0x20 || c >= 0x7f) {
            return "byte 0x" + std::string(1, "0123456789abcdef"[c >> 4]) + "0123456789abcdef"[c & 15];
        }
        return std::string("'") + m_src[m_pos] + "'";
    }

    struct DepthGuard {
        explicit DepthGuard(Parser &p) : parser(p)
        {
            if (++parser.m_depth > kMaxDepth) {
                throw ParseError(parser.m_pos, "expression nested too deeply");
            }
        }
        ~DepthGuard() { --parser.m_depth; }
        Parser &parser;
    };

    NodeId expr()
    {
        DepthGuard guard(*this);
        NodeId lhs = term();
        while (true) {
            if (accept('+')) {
                lhs = m_graph.add(lhs, term());
            } else if (accept('-')) {
                lhs = m_graph.sub(lhs, term());
            } else {
                return lhs;
            }
        }
    }

    NodeId term()
    {
        NodeId lhs = unary();
        while (true) {
            if (accept('*')) {
                lhs = m_graph.mul(lhs, unary());
            } else if (accept('/')) {
                lhs = m_graph.div(lhs, unary());
            } else {
                return lhs;
            }
        }
    }

    NodeId unary()
    {
        DepthGuard guard(*this);
        if (accept('-')) {
            return m_graph.neg(unary());
        }
        return power();
    }

    NodeId power()
    {
        NodeId base = primary();
        if (accept('^')) {
            skip_space();
            const std::size_t at = m_pos;
            const NodeId e = unary();
            const Node &n = m_graph.node(e);
            if (n.op != Op::kConst) {
                throw ParseError(at, "exponent of '^' must be a constant expression");
            }
            return m_graph.pow(base, n.payload);
        }
        return base;
    }

    NodeId primary()
    {
        skip_space();
        if (at_end()) {
            throw ParseError(m_pos, "expected expression, found end of input");
        }
        const char c = m_src[m_pos];
        if (c == '(') {
            ++m_pos;
            NodeId inner = expr();
            expect(')');
            return inner;
        }
        if (is_digit(c) || c == '.') {
            return number();
        }
        if (is_ident_start(c)) {
            return identifier();
        }
        throw ParseError(m_pos, "expected expression, found " + describe_here());
    }

    NodeId number()
    {
        const std::size_t start = m_pos;
        std::size_t p = m_pos;
        bool digits = false;
        while (p < m_src.size() && is_digit(m_src[p])) {
            ++p;
            digits = true;
        }
        if (p < m_src.size() && m_src[p] == '.') {
            ++p;
            while (p < m_src.size() && is_digit(m_src[p])) {
                ++p;
                digits = true;
            }
        }
        if (!digits) {
            throw ParseError(start, "expected digits in numeric literal");
        }
        if (p < m_src.size() && (m_src[p] == 'e' || m_src[p] == 'E')) {
            std::size_t q = p + 1;
            if (q < m_src.size() && (m_src[q] == '+' || m_src[q] == '-')) {
                ++q;
            }
            if (q >= m_src.size() || !is_digit(m_src[q])) {
                throw ParseError(q, "expected digits in exponent of numeric literal");
            }
            while (q < m_src.size() && is_digit(m_src[q])) {
                ++q;
            }
            p = q;
        }
        double value = 0.0;
        const auto res = std::from_chars(m_src.data() + start, m_src.data() + p, value);
        if (res.ec != std::errc{} || res.ptr != m_src.data() + p) {
            throw ParseError(start, "numeric literal out of range");
        }
        m_pos = p;
        return m_graph.constant(value);
    }

    NodeId identifier()
    {
        const std::size_t start = m_pos;
        while (!at_end() && (is_ident_start(m_src[m_pos]) || is_digit(m_src[m_pos]))) {
            ++m_pos;
        }
        const std::string_view name = m_src.substr(start, m_pos - start);
        const auto fn = std::find_if(kFunctions.begin(), kFunctions.end(),
                                     [&](const Function &f) { return f.name == name; });

        skip_space();
        const bool call = !at_end() && m_src[m_pos] == '(';
        if (call) {
            if (fn == kFunctions.end()) {
                throw ParseError(start, "unknown function '" + std::string(name) + "'");
            }
            ++m_pos;
            NodeId arg = expr();
            expect(')');
            return m_graph.apply(fn->op, {arg});
        }
        if (fn != kFunctions.end()) {
            throw ParseError(m_pos, "expected '(' after function name '" + std::string(name) + "'");
        }
        if (std::find(m_variables.begin(), m_variables.end(), name) == m_variables.end()) {
            m_variables.emplace_back(name);
        }
        return m_graph.variable(name);
    }

    ExprGraph &m_graph;
    std::string_view m_src;
    std::size_t m_pos = 0;
    int m_depth = 0;
    std::vector<std::string> m_variables;
};

void format_into(const ExprGraph &g, NodeId id, std::string &out)
{
    const Node &n = g.node(id);
    switch (n.op) {
        case Op::kConst:
            if (n.payload < 0.0) {
                out += "(-";
                out += format_number(-n.payload);
                out += ')';
            } else {
                out += format_number(n.payload);
            }
            return;
        case Op::kVar:
            out += g.variable_name(id);
            return;
        case Op::kAdd:
        case Op::kSub:
        case Op::kMul:
        case Op::kDiv: {
            static constexpr std::string_view symbols = "+-*/";
            const auto k = static_cast<std::size_t>(n.op) - static_cast<std::size_t>(Op::kAdd);
            out += '(';
            format_into(g, g.child(id, 0), out);
            out += ' ';
            out += symbols[k];
            out += ' ';
            format_into(g, g.child(id, 1), out);
            out += ')';
            return;
        }
        case Op::kNeg:
            out += "(-";
            format_into(g, g.child(id, 0), out);
            out += ')';
            return;
        case Op::kPow:
            out += '(';
            format_into(g, g.child(id, 0), out);
            out += '^';
            if (n.payload < 0.0) {
                out += "(-" + format_number(-n.payload) + ")";
            } else {
                out += format_number(n.payload);
            }
            out += ')';
            return;
        default:
            out += op_name(n.op);
            out += '(';
            format_into(g, g.child(id, 0), out);
            out += ')';
            return;
    }
}

} // namespace

ParseResult parse_expression(ExprGraph &g, std::string_view source)
{
    return Parser(g, source).run();
}

std::string format_number(double v)
{
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string format_expression(const ExprGraph &g, NodeId root)
{
    std::string out;
    format_into(g, root, out);
    return out;
}

} // namespace psens
