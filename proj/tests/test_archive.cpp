#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "archive.hpp"
#include "errors.hpp"
#include "fixtures.hpp"
#include "forward.hpp"
#include "quantizer.hpp"

using namespace riq;

namespace {

QuantizedModel bench_quantized(const Model &model, double k = 200.0) {
    QuantConfig cfg;
    cfg.k = k;
    cfg.eps0 = 0.01;
    return quantize_model(model, cfg);
}

} // namespace

TEST_CASE("archives roundtrip through bytes and disk") {
    const Model model = fixtures::bench_mlp();
    const QuantizedModel qm = bench_quantized(model);
    const Archive archive = Archive::build(model, qm);

    const auto bytes = archive.serialize();
    const Archive parsed = Archive::parse(bytes);
    REQUIRE(parsed.layers.size() == archive.layers.size());
    for (std::size_t i = 0; i < archive.layers.size(); ++i) {
        CHECK(parsed.layers[i].name == archive.layers[i].name);
        CHECK(parsed.layers[i].delta == archive.layers[i].delta);
        CHECK(parsed.layers[i].stream == archive.layers[i].stream);
        CHECK(parsed.layers[i].decode() == qm.layers[i].symbols);
    }
    CHECK(parsed.serialize() == bytes);

    fixtures::TempDir dir("archive_rt");
    const auto path = dir.path / "m.rqz";
    archive.write(path);
    const Archive from_disk = Archive::read(path);
    CHECK(from_disk.serialize() == bytes);

    // Reconstruction is exactly symbols * delta in fp32.
    const Model rebuilt = from_disk.reconstruct_into(model);
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        CHECK(rebuilt.weights[i] == qm.layers[i].reconstruct());
        CHECK(rebuilt.biases[i] == model.biases[i]);
    }
}

TEST_CASE("reconstruct without a skeleton flattens layers") {
    const Model model = fixtures::bench_mlp();
    const QuantizedModel qm = bench_quantized(model);
    const Archive archive = Archive::build(model, qm);
    const Model flat = archive.reconstruct();
    REQUIRE(flat.layer_count() == model.layer_count());
    for (std::size_t i = 0; i < flat.layer_count(); ++i) {
        CHECK(flat.layers[i].shape ==
              std::vector<std::uint32_t>{1, static_cast<std::uint32_t>(
                                                model.weights[i].size())});
        CHECK(flat.weights[i] == qm.layers[i].reconstruct());
    }
}

TEST_CASE("zero model reconstructs to zeros") {
    Model m;
    LayerSpec spec;
    spec.name = "z";
    spec.kind = LayerKind::dense;
    spec.activation = Activation::identity;
    spec.shape = {4, 4};
    spec.bias_count = 0;
    m.layers.push_back(spec);
    m.weights.push_back(std::vector<float>(16, 0.0f));
    m.biases.emplace_back();

    const QuantizedModel qm = bench_quantized(m);
    const Archive archive = Archive::build(m, qm);
    const Model back = Archive::parse(archive.serialize()).reconstruct_into(m);
    CHECK(back.weights[0] == std::vector<float>(16, 0.0f));
}

TEST_CASE("every byte of an archive is covered by the checksum") {
    const Model model = fixtures::bench_mlp();
    const Archive archive = Archive::build(model, bench_quantized(model));
    const auto bytes = archive.serialize();

    std::mt19937_64 gen(31);
    for (int trial = 0; trial < 40; ++trial) {
        auto corrupted = bytes;
        const std::size_t at = gen() % corrupted.size();
        corrupted[at] ^= static_cast<std::uint8_t>(1 + gen() % 255);
        CHECK_THROWS_AS(Archive::parse(corrupted), Error);
    }
}

TEST_CASE("wrong magic and version are reported by name") {
    const Model model = fixtures::bench_mlp();
    const Archive archive = Archive::build(model, bench_quantized(model));
    auto bytes = archive.serialize();

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_WITH_AS(Archive::parse(bad_magic), doctest::Contains("BadMagic"),
                         Error);

    // Bump the version and rewrite the trailing checksum so only the
    // version check can fire.
    auto bad_version = bytes;
    bad_version[4] = 9;
    const std::uint64_t sum = [&] {
        std::uint64_t h = 14695981039346656037ULL;
        for (std::size_t i = 0; i + 8 < bad_version.size(); ++i) {
            h ^= bad_version[i];
            h *= 1099511628211ULL;
        }
        return h;
    }();
    for (int i = 0; i < 8; ++i)
        bad_version[bad_version.size() - 8 + i] =
            static_cast<std::uint8_t>(sum >> (8 * i));
    CHECK_THROWS_WITH_AS(Archive::parse(bad_version),
                         doctest::Contains("VersionUnsupported"), Error);

    auto truncated = bytes;
    truncated.resize(truncated.size() - 3);
    CHECK_THROWS_WITH_AS(Archive::parse(truncated),
                         doctest::Contains("ChecksumMismatch"), Error);
}

TEST_CASE("skeleton mismatches are refused") {
    const Model model = fixtures::bench_mlp();
    const Archive archive = Archive::build(model, bench_quantized(model));

    Model renamed = model;
    renamed.layers[2].name = "other";
    CHECK_THROWS_WITH_AS(archive.reconstruct_into(renamed),
                         doctest::Contains("UnknownLayer"), Error);

    CHECK_THROWS_WITH_AS(archive.layer_index("nope"),
                         doctest::Contains("UnknownLayer"), Error);
}

TEST_CASE("compression ratio: entropy estimate vs. real archive size") {
    // One gaussian layer big enough for the entropy formula to dominate.
    Model m;
    LayerSpec spec;
    spec.name = "wide";
    spec.kind = LayerKind::dense;
    spec.activation = Activation::identity;
    spec.shape = {100, 400};
    spec.bias_count = 0;
    m.layers.push_back(spec);
    std::mt19937_64 gen(12);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<float> w(40000);
    for (float &v : w)
        v = static_cast<float>(gauss(gen));
    m.weights.push_back(std::move(w));
    m.biases.emplace_back();

    const QuantizedModel qm = bench_quantized(m, 50.0);
    const Archive archive = Archive::build(m, qm);
    const RatioReport ratios = compression_ratio(qm, archive);
    CHECK(ratios.estimate == doctest::Approx(ratios.actual).epsilon(0.03));
    CHECK(estimate_ratio(qm) == doctest::Approx(ratios.estimate).epsilon(1e-9));
}

TEST_CASE("uniform two-symbol layer compresses 32x") {
    Model m;
    LayerSpec spec;
    spec.name = "bits";
    spec.kind = LayerKind::dense;
    spec.activation = Activation::identity;
    spec.shape = {1000, 1000};
    spec.bias_count = 0;
    m.layers.push_back(spec);
    std::mt19937_64 gen(3);
    std::vector<float> w(1000000);
    for (float &v : w)
        v = gen() % 2 ? 1.0f : -1.0f;
    m.weights.push_back(std::move(w));
    m.biases.emplace_back();

    QuantizedModel qm;
    qm.layers.push_back(quantize_uniform(m.weights[0], 1.0)); // symbols are +-1
    REQUIRE(empirical_entropy(qm.layers[0].symbols) == doctest::Approx(1.0).epsilon(0.01));
    const Archive archive = Archive::build(m, qm);
    const RatioReport ratios = compression_ratio(qm, archive);
    CHECK(ratios.actual == doctest::Approx(32.0).epsilon(0.02));
}

TEST_CASE("constant-symbol layers give enormous ratios") {
    Model m;
    LayerSpec spec;
    spec.name = "flat";
    spec.kind = LayerKind::dense;
    spec.activation = Activation::identity;
    spec.shape = {100, 100};
    spec.bias_count = 0;
    m.layers.push_back(spec);
    m.weights.push_back(std::vector<float>(10000, 0.25f));
    m.biases.emplace_back();

    QuantConfig cfg;
    cfg.k = 3.0;
    cfg.eps0 = 0.0;
    const QuantizedModel qm = quantize_model(m, cfg);
    const Archive archive = Archive::build(m, qm);
    const RatioReport ratios = compression_ratio(qm, archive);
    CHECK(ratios.actual > 400.0);
    CHECK(ratios.estimate > 400.0);
}

TEST_CASE("layer-set mismatches are reported") {
    const Model model = fixtures::bench_mlp();
    const QuantizedModel qm = bench_quantized(model);
    const Archive archive = Archive::build(model, qm);

    QuantizedModel short_qm = qm;
    short_qm.layers.pop_back();
    CHECK_THROWS_WITH_AS(compression_ratio(short_qm, archive),
                         doctest::Contains("Mismatch"), Error);

    CHECK_THROWS_WITH_AS(compression_ratio(QuantizedModel{}, archive),
                         doctest::Contains("Mismatch"), Error);
    CHECK_THROWS_AS(estimate_ratio(QuantizedModel{}), Error);
}

TEST_CASE("fuzzed archives roundtrip") {
    std::mt19937_64 gen(444);
    for (int trial = 0; trial < 10; ++trial) {
        Model m;
        const int layers = 1 + static_cast<int>(gen() % 3);
        for (int l = 0; l < layers; ++l) {
            LayerSpec spec;
            spec.name = "f" + std::to_string(l);
            spec.kind = LayerKind::dense;
            spec.activation = Activation::identity;
            const auto rows = static_cast<std::uint32_t>(1 + gen() % 40);
            const auto cols = static_cast<std::uint32_t>(1 + gen() % 40);
            spec.shape = {rows, cols};
            spec.bias_count = 0;
            m.layers.push_back(spec);
            std::vector<float> w(static_cast<std::size_t>(rows) * cols);
            std::normal_distribution<double> gauss(0.0, 1.0);
            for (float &v : w)
                v = static_cast<float>(gauss(gen));
            m.weights.push_back(std::move(w));
            m.biases.emplace_back();
        }
        const QuantizedModel qm = bench_quantized(m, 20.0 + static_cast<double>(gen() % 100));
        const Archive archive = Archive::build(m, qm);
        const Archive back = Archive::parse(archive.serialize());
        for (std::size_t i = 0; i < qm.layers.size(); ++i)
            CHECK(back.layers[i].decode() == qm.layers[i].symbols);
    }
}
