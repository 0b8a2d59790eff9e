#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "model.hpp"
#include "quantizer.hpp"
#include "rans.hpp"

namespace riq {

struct ArchiveLayer {
    std::string name;
    std::uint64_t weight_count = 0;
    double delta = 1.0;
    FrequencyTable table;
    std::vector<std::uint8_t> stream;

    std::vector<std::int32_t> decode() const;
    std::vector<float> reconstruct() const; // symbols * delta as fp32
};

// Per-layer rANS streams plus their coding tables. Wire format (.rqz, all
// little-endian): magic "RQZ1", u16 version, u32 layer count, then per layer
// u16 name length, name bytes, u32 weight count, f64 delta, u16 alphabet
// size, zig-zag varint alphabet deltas, u16 precision, u16 scaled counts,
// u32 stream length, stream bytes; terminated by a u64 FNV-1a checksum over
// everything before it.
struct Archive {
    std::vector<ArchiveLayer> layers;

    static Archive build(const Model &source, const QuantizedModel &quantized,
                         unsigned precision = 12);

    std::vector<std::uint8_t> serialize() const;
    static Archive parse(std::span<const std::uint8_t> bytes);

    void write(const std::filesystem::path &path) const;
    static Archive read(const std::filesystem::path &path);

    // Every layer as a flat dense row; values are exactly symbols*delta.
    Model reconstruct() const;
    // Same values arranged on the skeleton's topology with its biases.
    Model reconstruct_into(const Model &skeleton) const;

    std::size_t layer_index(std::string_view name) const; // throws UnknownLayer
    std::uint64_t serialized_bits() const;
};

// Size of one serialized coding table in bits (alphabet varints plus scaled
// counts plus their length fields).
std::uint64_t table_bits(const FrequencyTable &table);

struct RatioReport {
    double estimate = 0.0; // 32N / sum(n_l H_l + |T_l|)
    double actual = 0.0;   // 32N / serialized archive bits
};

// Both compression-ratio views for a quantized model and the archive built
// from it. Throws Mismatch when the layer sets disagree.
RatioReport compression_ratio(const QuantizedModel &quantized, const Archive &archive);

// Entropy-formula estimate straight from symbol streams (tables are built,
// streams are not).
double estimate_ratio(const QuantizedModel &quantized, unsigned precision = 12);

} // namespace riq
