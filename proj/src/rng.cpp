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

#include <psens/rng.hpp>

#include <cmath>
#include <numbers>

namespace psens
{

namespace
{

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

} // namespace

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

CounterRng::CounterRng(std::uint64_t seed) : m_key(splitmix64(seed + kGolden)) {}

CounterRng::CounterRng(std::uint64_t seed, Stream stream)
    : CounterRng(CounterRng(seed).substream(static_cast<std::uint64_t>(stream)))
{
}

CounterRng CounterRng::substream(std::uint64_t id) const
{
    return CounterRng(FromKey{}, splitmix64(m_key ^ splitmix64(id * kGolden + 0x632be59bd9b4e019ULL)));
}

std::uint64_t CounterRng::next_u64() noexcept
{
    ++m_counter;
    return splitmix64(m_key + m_counter * kGolden);
}

double CounterRng::uniform() noexcept
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::normal() noexcept
{
    if (m_spare) {
        const double z = *m_spare;
        m_spare.reset();
        return z;
    }
    // u1 in (0, 1] keeps the logarithm finite.
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    m_spare = r * std::sin(theta);
    return r * std::cos(theta);
}

} // namespace psens
