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

#ifndef PSENS_PARSE_HPP
#define PSENS_PARSE_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <psens/expr.hpp>

namespace psens
{

struct ParseResult {
    NodeId root;
    // Variable names in order of first occurrence in the source.
    std::vector<std::string> variables;
};

class ParseError : public Error
{
public:
    ParseError(std::size_t offset, std::string message);

    std::size_t offset() const noexcept { return m_offset; }
    const std::string &message() const noexcept { return m_message; }

private:
    std::size_t m_offset;
    std::string m_message;
};

/// Parses the expression language into `g`. The grammar is documented in
/// docs/grammar.md. Nodes are built through ExprGraph::apply, so interning
/// and local simplification happen during the parse.
ParseResult parse_expression(ExprGraph &g, std::string_view source);

// Fully parenthesised rendering that parse_expression maps back onto the
// same node. Shared subterms are expanded, so output can be large for DAGs.
std::string format_expression(const ExprGraph &g, NodeId root);

// Shortest decimal form that reads back to the same double.
std::string format_number(double v);

} // namespace psens

#endif
