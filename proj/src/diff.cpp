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

#include <psens/diff.hpp>

#include <optional>

namespace psens
{

NodeId GradientMap::at(std::string_view name) const
{
    for (const auto &[n, id] : entries) {
        if (n == name) {
            return id;
        }
    }
    throw Error("no gradient entry for variable '" + std::string(name) + "'");
}

GradientMap gradient(ExprGraph &g, NodeId f, std::span<const std::string> vars)
{
    g.check(f);
    std::vector<NodeId> var_ids;
    var_ids.reserve(vars.size());
    for (const auto &name : vars) {
        auto id = g.find_variable(name);
        if (!id) {
            throw Error("variable '" + name + "' is not registered in the graph");
        }
        var_ids.push_back(*id);
    }

    const std::size_t top = f.index();
    std::vector<std::optional<NodeId>> adjoint(top + 1);
    adjoint[top] = g.constant(1.0);

    auto accumulate = [&](NodeId target, NodeId contribution) {
        auto &slot = adjoint[target.index()];
        slot = slot ? g.add(*slot, contribution) : contribution;
    };

    // Node ids are a topological order, so a descending sweep visits every
    // node after all of its parents.
    for (std::size_t i = top + 1; i-- > 0;) {
        if (!adjoint[i]) {
            continue;
        }
        const NodeId self = g.id_at(i);
        const NodeId a = *adjoint[i];
        const Node n = g.node(self);
        switch (n.op) {
            case Op::kConst:
            case Op::kVar:
                break;
            case Op::kAdd:
                accumulate(g.child(self, 0), a);
                accumulate(g.child(self, 1), a);
                break;
            case Op::kSub:
                accumulate(g.child(self, 0), a);
                accumulate(g.child(self, 1), g.neg(a));
                break;
            case Op::kMul: {
                const NodeId x = g.child(self, 0);
                const NodeId y = g.child(self, 1);
                accumulate(x, g.mul(a, y));
                accumulate(y, g.mul(a, x));
                break;
            }
            case Op::kDiv: {
                const NodeId x = g.child(self, 0);
                const NodeId y = g.child(self, 1);
                accumulate(x, g.div(a, y));
                // d(x/y)/dy = -(x/y)/y, reusing the forward node.
                accumulate(y, g.neg(g.div(g.mul(a, self), y)));
                break;
            }
            case Op::kNeg:
                accumulate(g.child(self, 0), g.neg(a));
                break;
            case Op::kPow: {
                const NodeId x = g.child(self, 0);
                const double k = n.payload;
                const NodeId dpow = g.mul(g.constant(k), g.pow(x, k - 1.0));
                accumulate(x, g.mul(a, dpow));
                break;
            }
            case Op::kExp:
                accumulate(g.child(self, 0), g.mul(a, self));
                break;
            case Op::kLn:
                accumulate(g.child(self, 0), g.div(a, g.child(self, 0)));
                break;
            case Op::kSqrt:
                accumulate(g.child(self, 0), g.div(a, g.mul(g.constant(2.0), self)));
                break;
            case Op::kSigmoid: {
                const NodeId slope = g.mul(self, g.sub(g.constant(1.0), self));
                accumulate(g.child(self, 0), g.mul(a, slope));
                break;
            }
        }
    }

    GradientMap out;
    out.function = f;
    out.entries.reserve(vars.size());
    for (std::size_t k = 0; k < vars.size(); ++k) {
        const std::size_t idx = var_ids[k].index();
        const NodeId d = idx <= top && adjoint[idx] ? *adjoint[idx] : g.constant(0.0);
        out.entries.emplace_back(vars[k], d);
    }
    return out;
}

} // namespace psens
