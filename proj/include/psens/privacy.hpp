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

#ifndef PSENS_PRIVACY_HPP
#define PSENS_PRIVACY_HPP

#include <cstddef>
#include <cstdint>
#include <span>

#include <Eigen/Core>

#include <psens/expr.hpp>
#include <psens/rng.hpp>

namespace psens
{

// A Renyi-DP guarantee (alpha, epsilon).
struct RdpPoint {
    double alpha;
    double epsilon;
};

// Gaussian mechanism over a Lipschitz aggregation.
struct MechanismParams {
    // Absolute standard deviation of the added noise, in output units.
    double sigma;
    // Lipschitz constant of the aggregation function.
    double lipschitz_agg = 1.0;
    std::uint64_t seed = 0;
};

struct DpSgdParams {
    double clip_bound = 0.1;
    // Per-step noise std is noise_multiplier * clip_bound.
    double noise_multiplier = 5.0;
    double learning_rate = 0.1;
    std::size_t batch_size = 2000;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Individual RDP of the Gaussian mechanism for one person with realised
/// gradient norm `grad_norm`: epsilon = alpha * L^2 * grad_norm^2 / (2 sigma^2).
RdpPoint individual_rdp(double alpha, const MechanismParams &params, double grad_norm);

// Same guarantee from the squared gradient norm, which callers usually have
// before any square root is taken.
RdpPoint individual_rdp_from_squared_norm(double alpha, const MechanismParams &params, double grad_norm_sq);

// Fixed-order additive composition at a single order.
RdpPoint rdp_compose(std::span<const RdpPoint> points);

// i.i.d. N(0, sigma^2) samples.
Eigen::VectorXd gaussian_noise(Eigen::Index n, double sigma, CounterRng &rng);

// Releases value + N(0, sigma^2) using a draw from the mechanism stream.
double gaussian_mechanism(double value, const MechanismParams &params, std::uint64_t release_index);

/// Scales `v` onto the L2 ball of radius `bound`; vectors already inside the
/// ball (including zero) are returned unchanged.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> clip_l2(const Eigen::MatrixBase<Derived> &v,
                                                                     typename Derived::Scalar bound)
{
    using Scalar = typename Derived::Scalar;
    if (!(bound > Scalar(0))) {
        throw Error("clip bound must be positive");
    }
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = v;
    const Scalar norm = out.stableNorm();
    if (norm > bound) {
        out *= bound / norm;
    }
    return out;
}

} // namespace psens

#endif
