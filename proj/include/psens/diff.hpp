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

#ifndef PSENS_DIFF_HPP
#define PSENS_DIFF_HPP

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <psens/expr.hpp>

namespace psens
{

using NamedNode = std::pair<std::string, NodeId>;
using NamedNodes = std::vector<NamedNode>;

// Symbolic partial derivatives of one function, in the requested order.
struct GradientMap {
    NodeId function;
    NamedNodes entries;

    NodeId at(std::string_view name) const;
    std::size_t size() const noexcept { return entries.size(); }
};

/// Reverse-mode symbolic differentiation of `f` with respect to `vars`.
///
/// Adjoints are accumulated over the sub-DAG reachable from `f` in
/// decreasing node-id order, once per shared node, so the result has size
/// linear in the differentiated sub-DAG. The derivative nodes are ordinary
/// graph nodes and can be differentiated again. Variables that `f` does not
/// depend on map to the constant 0.
GradientMap gradient(ExprGraph &g, NodeId f, std::span<const std::string> vars);

} // namespace psens

#endif
