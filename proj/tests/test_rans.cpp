#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "errors.hpp"
#include "quantizer.hpp"
#include "rans.hpp"

using namespace riq;

TEST_CASE("single-symbol stream takes the whole scale") {
    const std::vector<std::int32_t> s(100, 42);
    const FrequencyTable t = build_table(s, 12);
    REQUIRE(t.alphabet_size() == 1);
    CHECK(t.alphabet[0] == 42);
    CHECK(t.scaled[0] == 4096);
}

TEST_CASE("equal counts split the scale evenly") {
    const std::vector<std::int32_t> s{7, -3, 7, -3};
    const FrequencyTable t = build_table(s, 12);
    REQUIRE(t.alphabet_size() == 2);
    CHECK(t.alphabet == std::vector<std::int32_t>{-3, 7});
    CHECK(t.scaled[0] == 2048);
    CHECK(t.scaled[1] == 2048);
}

TEST_CASE("largest remainder keeps exact proportions exact") {
    const std::vector<std::int32_t> s{1, 2, 2, 2};
    const FrequencyTable t = build_table(s, 2);
    CHECK(t.scaled == std::vector<std::uint32_t>{1, 3});
}

TEST_CASE("every observed symbol keeps a nonzero scaled count") {
    std::vector<std::int32_t> s(100000, 0);
    s[0] = 123456; // one-in-1e5 outlier
    const FrequencyTable t = build_table(s, 12);
    REQUIRE(t.alphabet_size() == 2);
    CHECK(t.scaled[1] >= 1);
    std::uint64_t sum = 0;
    for (auto f : t.scaled)
        sum += f;
    CHECK(sum == 4096);
}

TEST_CASE("alphabet larger than the scale is rejected") {
    std::vector<std::int32_t> s(5);
    for (int i = 0; i < 5; ++i)
        s[i] = i;
    CHECK_THROWS_WITH_AS(build_table(s, 2), doctest::Contains("AlphabetTooLarge"),
                         Error);
    CHECK_THROWS_WITH_AS(build_table(std::vector<std::int32_t>{}, 12),
                         doctest::Contains("EmptyInput"), Error);
}

TEST_CASE("empty stream is just the state flush") {
    const FrequencyTable t = build_table(std::vector<std::int32_t>{0}, 12);
    const auto bytes = rans_encode(std::vector<std::int32_t>{}, t);
    CHECK(bytes.size() == 4);
    const auto back = rans_decode(bytes, t, 0);
    CHECK(back.empty());
}

TEST_CASE("roundtrip on random streams over a 16-symbol alphabet") {
    std::mt19937_64 gen(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + gen() % 3000;
        std::vector<std::int32_t> s(n);
        for (auto &v : s)
            v = static_cast<std::int32_t>(gen() % 16) - 8;
        const FrequencyTable t = build_table(s, 12);
        const auto bytes = rans_encode(s, t);
        CHECK(rans_decode(bytes, t, n) == s);
    }
}

TEST_CASE("roundtrip with a skewed alphabet and low precision") {
    std::mt19937_64 gen(77);
    std::vector<std::int32_t> s;
    for (int i = 0; i < 20000; ++i) {
        const auto r = gen() % 100;
        s.push_back(r < 90 ? 0 : (r < 99 ? 1 : -7));
    }
    for (unsigned precision : {2u, 5u, 12u, 15u}) {
        const FrequencyTable t = build_table(s, precision);
        const auto bytes = rans_encode(s, t);
        CHECK(rans_decode(bytes, t, s.size()) == s);
    }
}

TEST_CASE("uniform 4-symbol stream codes near 2 bits/symbol") {
    std::mt19937_64 gen(5);
    const std::size_t n = 100000;
    std::vector<std::int32_t> s(n);
    for (auto &v : s)
        v = static_cast<std::int32_t>(gen() % 4);
    const FrequencyTable t = build_table(s, 12);
    const auto bytes = rans_encode(s, t);
    const double bits_per_symbol = 8.0 * static_cast<double>(bytes.size()) /
                                   static_cast<double>(n);
    CHECK(bits_per_symbol == doctest::Approx(2.0).epsilon(0.01));
    CHECK(bits_per_symbol >= empirical_entropy(s) - 1e-9);
}

TEST_CASE("coded size stays within 0.1 bits/symbol of the entropy") {
    std::mt19937_64 gen(6);
    std::normal_distribution<double> gauss(0.0, 40.0);
    const std::size_t n = 50000;
    std::vector<std::int32_t> s(n);
    for (auto &v : s)
        v = static_cast<std::int32_t>(std::lround(gauss(gen)));
    const FrequencyTable t = build_table(s, 12);
    const auto bytes = rans_encode(s, t);
    const double bits = 8.0 * static_cast<double>(bytes.size()) / static_cast<double>(n);
    CHECK(bits - empirical_entropy(s) <= 0.1);

    // The normalized table's cross entropy bounds the achievable size up to
    // the state flush.
    CHECK(t.coding_bits_per_symbol() >= empirical_entropy(s) - 1e-9);
    CHECK(bits <= t.coding_bits_per_symbol() + 8.0 * 4 / static_cast<double>(n) + 1e-3);
}

TEST_CASE("symbols outside the table are refused") {
    const FrequencyTable t = build_table(std::vector<std::int32_t>{1, 2, 3}, 12);
    CHECK_THROWS_WITH_AS(rans_encode(std::vector<std::int32_t>{1, 4}, t),
                         doctest::Contains("SymbolNotInTable"), Error);
}

TEST_CASE("truncated or padded streams raise CorruptStream") {
    std::mt19937_64 gen(8);
    std::vector<std::int32_t> s(5000);
    for (auto &v : s)
        v = static_cast<std::int32_t>(gen() % 23);
    const FrequencyTable t = build_table(s, 12);
    auto bytes = rans_encode(s, t);

    auto truncated = bytes;
    truncated.resize(truncated.size() / 2);
    CHECK_THROWS_WITH_AS(rans_decode(truncated, t, s.size()),
                         doctest::Contains("CorruptStream"), Error);

    auto padded = bytes;
    padded.push_back(0);
    CHECK_THROWS_WITH_AS(rans_decode(padded, t, s.size()),
                         doctest::Contains("CorruptStream"), Error);

    CHECK_THROWS_WITH_AS(rans_decode(std::vector<std::uint8_t>{1, 2}, t, 1),
                         doctest::Contains("CorruptStream"), Error);
}
