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

#include <psens/privacy.hpp>

#include <cmath>
#include <string>

namespace psens
{

void DpSgdParams::validate() const
{
    if (!(clip_bound > 0.0)) {
        throw Error("clip bound must be positive");
    }
    if (!(noise_multiplier >= 0.0) || !std::isfinite(noise_multiplier)) {
        throw Error("noise multiplier must be non-negative and finite");
    }
    if (!(learning_rate > 0.0)) {
        throw Error("learning rate must be positive");
    }
    if (batch_size < 1) {
        throw Error("batch size must be at least 1");
    }
}

RdpPoint individual_rdp_from_squared_norm(double alpha, const MechanismParams &params, double grad_norm_sq)
{
    if (!(alpha > 1.0) || !std::isfinite(alpha)) {
        throw Error("Renyi order alpha must be a finite value > 1");
    }
    if (!(params.sigma > 0.0)) {
        throw Error("sigma must be positive (sigma = 0 means unbounded privacy loss)");
    }
    if (!(params.lipschitz_agg >= 0.0)) {
        throw Error("Lipschitz constant of the aggregation must be non-negative");
    }
    if (!(grad_norm_sq >= 0.0) || !std::isfinite(grad_norm_sq)) {
        throw Error("gradient norm must be finite and non-negative");
    }
    const double lsq = params.lipschitz_agg * params.lipschitz_agg;
    const double eps = alpha * lsq * grad_norm_sq / (2.0 * params.sigma * params.sigma);
    if (!std::isfinite(eps)) {
        throw Error("RDP epsilon overflowed");
    }
    return {alpha, eps};
}

RdpPoint individual_rdp(double alpha, const MechanismParams &params, double grad_norm)
{
    if (!(grad_norm >= 0.0)) {
        throw Error("gradient norm must be non-negative");
    }
    return individual_rdp_from_squared_norm(alpha, params, grad_norm * grad_norm);
}

RdpPoint rdp_compose(std::span<const RdpPoint> points)
{
    if (points.empty()) {
        throw Error("cannot compose an empty list of RDP guarantees");
    }
    RdpPoint total{points.front().alpha, 0.0};
    for (const RdpPoint &p : points) {
        if (p.alpha != total.alpha) {
            throw Error("RDP composition requires a single order; got alpha " + std::to_string(total.alpha) + " and "
                        + std::to_string(p.alpha));
        }
        total.epsilon += p.epsilon;
    }
    return total;
}

Eigen::VectorXd gaussian_noise(Eigen::Index n, double sigma, CounterRng &rng)
{
    if (!(sigma >= 0.0)) {
        throw Error("noise standard deviation must be non-negative");
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    if (sigma == 0.0) {
        return out;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        out[i] = sigma * rng.normal();
    }
    return out;
}

double gaussian_mechanism(double value, const MechanismParams &params, std::uint64_t release_index)
{
    CounterRng rng = CounterRng(params.seed, Stream::kMechanism).substream(release_index);
    return value + gaussian_noise(1, params.sigma, rng)[0];
}

} // namespace psens
