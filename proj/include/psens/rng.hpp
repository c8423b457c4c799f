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

#ifndef PSENS_RNG_HPP
#define PSENS_RNG_HPP

#include <cstdint>
#include <optional>

namespace psens
{

// Named sub-streams. Values are part of the reproducibility contract.
enum class Stream : std::uint64_t {
    kData = 1,
    kWeightInit = 2,
    kDpNoise = 3,
    kMechanism = 4,
};

/// Counter-based generator: draw n of a stream is splitmix64(key + n * 0x9e3779b97f4a7c15)
/// where key is derived from (seed, stream path). Sub-streams never share draws,
/// so interleaving consumers cannot perturb one another. Not thread-safe;
/// each consumer owns its handle.
class CounterRng
{
public:
    explicit CounterRng(std::uint64_t seed);
    CounterRng(std::uint64_t seed, Stream stream);

    // Independent child stream; a pure function of this stream's key and `id`.
    CounterRng substream(std::uint64_t id) const;

    std::uint64_t next_u64() noexcept;
    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    // Standard normal via Box-Muller; draws are consumed in pairs.
    double normal() noexcept;

    std::uint64_t key() const noexcept { return m_key; }
    std::uint64_t counter() const noexcept { return m_counter; }

private:
    struct FromKey {};
    CounterRng(FromKey, std::uint64_t key) : m_key(key) {}

    std::uint64_t m_key;
    std::uint64_t m_counter = 0;
    std::optional<double> m_spare;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

} // namespace psens

#endif
