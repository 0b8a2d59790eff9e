#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace riq {

// Symbol statistics normalized to a power-of-two total so the coder can use
// shifts. Every symbol observed in the source stream keeps a scaled count of
// at least 1.
struct FrequencyTable {
    std::vector<std::int32_t> alphabet; // sorted, distinct
    std::vector<std::uint64_t> counts;  // raw occurrence counts
    std::uint64_t total = 0;
    std::vector<std::uint32_t> scaled; // sums to 1 << precision
    unsigned precision = 12;

    std::size_t alphabet_size() const { return alphabet.size(); }
    std::optional<std::size_t> index_of(std::int32_t symbol) const;
    // Expected bits/symbol when coding the raw counts with the scaled
    // frequencies (cross entropy).
    double coding_bits_per_symbol() const;
    void validate() const;
};

// Largest-remainder normalization of the symbol histogram to 2^precision.
// precision must lie in [1, 15] and the alphabet must fit in 2^precision.
FrequencyTable build_table(std::span<const std::int32_t> symbols,
                           unsigned precision = 12);

// Same, but widens the precision beyond min_precision (up to 15) when the
// alphabet outgrows the scale.
FrequencyTable build_table_fitting(std::span<const std::int32_t> symbols,
                                   unsigned min_precision = 12);

// Range-variant ANS, 32-bit state, byte renormalization. Symbols are
// consumed in reverse so the decoder emits them in stream order; the final
// state is flushed as 4 bytes at the stream head.
std::vector<std::uint8_t> rans_encode(std::span<const std::int32_t> symbols,
                                      const FrequencyTable &table);

// Exact inverse of rans_encode for `count` symbols. Throws CorruptStream on
// truncation, trailing garbage, or a bad final state.
std::vector<std::int32_t> rans_decode(std::span<const std::uint8_t> stream,
                                      const FrequencyTable &table,
                                      std::size_t count);

} // namespace riq
