#pragma once

#include <cstdint>
#include <random>

namespace cfhet {

/// Labels for independent random streams. A stream is keyed by
/// (seed, index, tag), so draws for replication r never depend on how many
/// replications ran before it or on which thread runs it.
enum class StreamTag : std::uint64_t {
    Instrument = 1,
    StructuralNoise = 2,
    FirstStageNoise = 3,
    Bootstrap = 4,
    OracleChunk = 5,
    CellSeed = 6,
};

using Engine = std::mt19937_64;

inline Engine make_stream(std::uint64_t seed, std::uint64_t index, StreamTag tag) {
    const auto t = static_cast<std::uint64_t>(tag);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(t)};
    return Engine(seq);
}

/// Derives a child seed, e.g. one per Monte Carlo grid cell.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    Engine e = make_stream(seed, index, StreamTag::CellSeed);
    return e();
}

}  // namespace cfhet
