#include "rans.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "errors.hpp"

namespace riq {

namespace {
constexpr std::uint32_t kStateLow = 1u << 23; // normalized interval lower bound
}

std::optional<std::size_t> FrequencyTable::index_of(std::int32_t symbol) const {
    const auto it = std::lower_bound(alphabet.begin(), alphabet.end(), symbol);
    if (it == alphabet.end() || *it != symbol)
        return std::nullopt;
    return static_cast<std::size_t>(it - alphabet.begin());
}

double FrequencyTable::coding_bits_per_symbol() const {
    const double scale = std::exp2(static_cast<double>(precision));
    double bits = 0.0;
    for (std::size_t i = 0; i < alphabet.size(); ++i) {
        const double p = static_cast<double>(counts[i]) / static_cast<double>(total);
        bits -= p * std::log2(static_cast<double>(scaled[i]) / scale);
    }
    return bits;
}

void FrequencyTable::validate() const {
    require(!alphabet.empty(), ErrorCode::empty_input, "frequency table is empty");
    require(precision >= 1 && precision <= 15, ErrorCode::invalid_argument,
            "table precision must lie in [1, 15]");
    require(alphabet.size() == counts.size() && alphabet.size() == scaled.size(),
            ErrorCode::invalid_argument, "frequency table arrays disagree");
    require(std::is_sorted(alphabet.begin(), alphabet.end()) &&
                std::adjacent_find(alphabet.begin(), alphabet.end()) == alphabet.end(),
            ErrorCode::invalid_argument, "alphabet must be sorted and distinct");
    std::uint64_t sum = 0;
    for (std::uint32_t f : scaled) {
        require(f >= 1, ErrorCode::invalid_argument, "scaled count fell to zero");
        sum += f;
    }
    require(sum == (std::uint64_t{1} << precision), ErrorCode::invalid_argument,
            "scaled counts do not sum to 2^precision");
}

FrequencyTable build_table(std::span<const std::int32_t> symbols,
                           unsigned precision) {
    require(!symbols.empty(), ErrorCode::empty_input,
            "cannot build a table from an empty stream");
    require(precision >= 1 && precision <= 15, ErrorCode::invalid_argument,
            "table precision must lie in [1, 15]");

    std::map<std::int32_t, std::uint64_t> histogram;
    for (std::int32_t s : symbols)
        ++histogram[s];

    FrequencyTable table;
    table.precision = precision;
    table.total = symbols.size();
    for (const auto &[sym, count] : histogram) {
        table.alphabet.push_back(sym);
        table.counts.push_back(count);
    }

    const std::uint64_t target = std::uint64_t{1} << precision;
    require(table.alphabet.size() <= target, ErrorCode::alphabet_too_large,
            std::to_string(table.alphabet.size()) +
                " distinct symbols exceed 2^precision = " + std::to_string(target));

    // Largest-remainder rounding with a floor of 1 per symbol.
    const std::size_t n = table.alphabet.size();
    std::vector<std::uint64_t> base(n);
    std::vector<std::uint64_t> rem(n);
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t num = table.counts[i] * target;
        base[i] = std::max<std::uint64_t>(num / table.total, 1);
        rem[i] = num % table.total;
        assigned += base[i];
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (assigned < target) {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
        std::uint64_t deficit = target - assigned;
        for (std::size_t j = 0; deficit > 0; j = (j + 1) % n) {
            ++base[order[j]];
            --deficit;
        }
    } else if (assigned > target) {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return rem[a] < rem[b]; });
        std::uint64_t excess = assigned - target;
        for (std::size_t j = 0; excess > 0; j = (j + 1) % n) {
            if (base[order[j]] > 1) {
                --base[order[j]];
                --excess;
            }
        }
    }

    table.scaled.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        table.scaled[i] = static_cast<std::uint32_t>(base[i]);
    table.validate();
    return table;
}

FrequencyTable build_table_fitting(std::span<const std::int32_t> symbols,
                                   unsigned min_precision) {
    require(!symbols.empty(), ErrorCode::empty_input,
            "cannot build a table from an empty stream");
    std::map<std::int32_t, std::uint64_t> histogram;
    for (std::int32_t s : symbols)
        ++histogram[s];
    unsigned precision = min_precision;
    while (precision < 15 && (std::size_t{1} << precision) < histogram.size())
        ++precision;
    return build_table(symbols, precision);
}

std::vector<std::uint8_t> rans_encode(std::span<const std::int32_t> symbols,
                                      const FrequencyTable &table) {
    table.validate();
    const unsigned precision = table.precision;

    // Cumulative starts per alphabet index.
    std::vector<std::uint32_t> cum(table.alphabet_size() + 1, 0);
    for (std::size_t i = 0; i < table.alphabet_size(); ++i)
        cum[i + 1] = cum[i] + table.scaled[i];

    std::vector<std::uint8_t> out;
    out.reserve(symbols.size() + 16);
    std::uint32_t state = kStateLow;

    for (std::size_t i = symbols.size(); i-- > 0;) {
        const auto idx = table.index_of(symbols[i]);
        require(idx.has_value(), ErrorCode::symbol_not_in_table,
                "symbol " + std::to_string(symbols[i]) + " is not in the table");
        const std::uint32_t freq = table.scaled[*idx];
        const std::uint32_t start = cum[*idx];

        const std::uint32_t state_max = ((kStateLow >> precision) << 8) * freq;
        while (state >= state_max) {
            out.push_back(static_cast<std::uint8_t>(state));
            state >>= 8;
        }
        state = ((state / freq) << precision) + (state % freq) + start;
    }

    // Flush; after the final reverse these four bytes head the stream.
    out.push_back(static_cast<std::uint8_t>(state));
    out.push_back(static_cast<std::uint8_t>(state >> 8));
    out.push_back(static_cast<std::uint8_t>(state >> 16));
    out.push_back(static_cast<std::uint8_t>(state >> 24));
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<std::int32_t> rans_decode(std::span<const std::uint8_t> stream,
                                      const FrequencyTable &table,
                                      std::size_t count) {
    table.validate();
    const unsigned precision = table.precision;
    const std::uint32_t mask = (1u << precision) - 1;

    require(stream.size() >= 4, ErrorCode::corrupt_stream,
            "stream too short for a coder state");

    std::vector<std::uint32_t> cum(table.alphabet_size() + 1, 0);
    for (std::size_t i = 0; i < table.alphabet_size(); ++i)
        cum[i + 1] = cum[i] + table.scaled[i];

    // Slot -> alphabet index lookup; every slot is covered because the
    // scaled counts sum to 2^precision.
    std::vector<std::uint32_t> slot_to_index(std::size_t{1} << precision);
    for (std::size_t i = 0; i < table.alphabet_size(); ++i)
        std::fill(slot_to_index.begin() + cum[i], slot_to_index.begin() + cum[i + 1],
                  static_cast<std::uint32_t>(i));

    std::size_t pos = 0;
    std::uint32_t state = (std::uint32_t{stream[0]} << 24) |
                          (std::uint32_t{stream[1]} << 16) |
                          (std::uint32_t{stream[2]} << 8) | stream[3];
    pos = 4;

    std::vector<std::int32_t> symbols(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t slot = state & mask;
        const std::uint32_t idx = slot_to_index[slot];
        symbols[i] = table.alphabet[idx];
        state = table.scaled[idx] * (state >> precision) + slot - cum[idx];
        while (state < kStateLow) {
            require(pos < stream.size(), ErrorCode::corrupt_stream,
                    "stream truncated during renormalization");
            state = (state << 8) | stream[pos++];
        }
    }
    require(pos == stream.size(), ErrorCode::corrupt_stream,
            "stream carries trailing bytes");
    require(state == kStateLow, ErrorCode::corrupt_stream,
            "coder state desynchronized");
    return symbols;
}

} // namespace riq
