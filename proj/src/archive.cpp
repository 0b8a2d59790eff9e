#include "archive.hpp"

#include <algorithm>
#include <fstream>

#include "binio.hpp"
#include "errors.hpp"
#include "forward.hpp"

namespace riq {

namespace {
constexpr char kMagic[4] = {'R', 'Q', 'Z', '1'};
constexpr std::uint16_t kVersion = 1;
} // namespace

std::vector<std::int32_t> ArchiveLayer::decode() const {
    return rans_decode(stream, table, weight_count);
}

std::vector<float> ArchiveLayer::reconstruct() const {
    const std::vector<std::int32_t> symbols = decode();
    std::vector<float> w(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i)
        w[i] = static_cast<float>(static_cast<double>(symbols[i]) * delta);
    return w;
}

Archive Archive::build(const Model &source, const QuantizedModel &quantized,
                       unsigned precision) {
    require(source.layer_count() == quantized.layers.size(),
            ErrorCode::archive_mismatch,
            "quantized model does not cover the source layers");
    Archive archive;
    for (std::size_t i = 0; i < quantized.layers.size(); ++i) {
        const QuantizedLayer &ql = quantized.layers[i];
        ArchiveLayer layer;
        layer.name = source.layers[i].name;
        layer.weight_count = ql.symbols.size();
        layer.delta = ql.delta;
        layer.table = build_table_fitting(ql.symbols, precision);
        layer.stream = rans_encode(ql.symbols, layer.table);
        archive.layers.push_back(std::move(layer));
    }
    return archive;
}

std::uint64_t table_bits(const FrequencyTable &table) {
    ByteWriter w;
    w.u16(static_cast<std::uint16_t>(table.alphabet_size()));
    std::int64_t prev = 0;
    for (std::int32_t sym : table.alphabet) {
        w.zigzag(static_cast<std::int64_t>(sym) - prev);
        prev = sym;
    }
    w.u16(static_cast<std::uint16_t>(table.precision));
    for (std::uint32_t f : table.scaled)
        w.u16(static_cast<std::uint16_t>(f));
    return std::uint64_t{8} * w.size();
}

std::vector<std::uint8_t> Archive::serialize() const {
    ByteWriter w;
    w.raw(kMagic, sizeof kMagic);
    w.u16(kVersion);
    w.u32(static_cast<std::uint32_t>(layers.size()));
    for (const ArchiveLayer &layer : layers) {
        layer.table.validate();
        require(layer.name.size() <= 0xffff, ErrorCode::invalid_argument,
                "layer name too long to serialize");
        require(layer.weight_count <= 0xffffffffULL, ErrorCode::invalid_argument,
                "layer too large to serialize");
        w.u16(static_cast<std::uint16_t>(layer.name.size()));
        w.raw(layer.name.data(), layer.name.size());
        w.u32(static_cast<std::uint32_t>(layer.weight_count));
        w.f64(layer.delta);
        w.u16(static_cast<std::uint16_t>(layer.table.alphabet_size()));
        std::int64_t prev = 0;
        for (std::int32_t sym : layer.table.alphabet) {
            w.zigzag(static_cast<std::int64_t>(sym) - prev);
            prev = sym;
        }
        w.u16(static_cast<std::uint16_t>(layer.table.precision));
        for (std::uint32_t f : layer.table.scaled)
            w.u16(static_cast<std::uint16_t>(f));
        w.u32(static_cast<std::uint32_t>(layer.stream.size()));
        w.raw(layer.stream.data(), layer.stream.size());
    }
    w.u64(fnv1a64(w.bytes()));
    return w.take();
}

Archive Archive::parse(std::span<const std::uint8_t> bytes) {
    require(bytes.size() >= sizeof kMagic, ErrorCode::bad_magic,
            "input shorter than the archive magic");
    require(std::equal(kMagic, kMagic + sizeof kMagic, bytes.begin()),
            ErrorCode::bad_magic, "not an rqz archive");
    require(bytes.size() >= sizeof kMagic + 2 + 4 + 8, ErrorCode::checksum_mismatch,
            "archive truncated before the checksum");

    ByteReader header(bytes.subspan(sizeof kMagic), ErrorCode::corrupt_stream,
                      "archive header");
    const std::uint16_t version = header.u16();
    require(version == kVersion, ErrorCode::version_unsupported,
            "archive version " + std::to_string(version) + " is not supported");

    const std::size_t body = bytes.size() - 8;
    ByteReader tail(bytes.subspan(body), ErrorCode::corrupt_stream, "archive checksum");
    const std::uint64_t declared = tail.u64();
    const std::uint64_t computed = fnv1a64(bytes.subspan(0, body));
    require(declared == computed, ErrorCode::checksum_mismatch,
            "archive checksum does not match its content");

    ByteReader r(bytes.subspan(0, body), ErrorCode::corrupt_stream, "archive");
    char magic[4];
    r.raw(magic, 4);
    r.u16(); // version, already checked
    const std::uint32_t layer_count = r.u32();

    Archive archive;
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        ArchiveLayer layer;
        const std::uint16_t name_len = r.u16();
        layer.name.resize(name_len);
        r.raw(layer.name.data(), name_len);
        layer.weight_count = r.u32();
        layer.delta = r.f64();

        const std::uint16_t alphabet_size = r.u16();
        layer.table.alphabet.resize(alphabet_size);
        std::int64_t prev = 0;
        for (std::uint16_t a = 0; a < alphabet_size; ++a) {
            prev += r.zigzag();
            require(prev >= INT32_MIN && prev <= INT32_MAX, ErrorCode::corrupt_stream,
                    "alphabet value out of range");
            layer.table.alphabet[a] = static_cast<std::int32_t>(prev);
        }
        layer.table.precision = r.u16();
        layer.table.scaled.resize(alphabet_size);
        for (std::uint16_t a = 0; a < alphabet_size; ++a)
            layer.table.scaled[a] = r.u16();
        // Raw counts are not serialized; carry the scaled ones so entropy
        // summaries on a parsed archive stay meaningful.
        layer.table.counts.assign(layer.table.scaled.begin(), layer.table.scaled.end());
        layer.table.total = 0;
        for (std::uint32_t f : layer.table.scaled)
            layer.table.total += f;
        layer.table.validate();

        const std::uint32_t stream_len = r.u32();
        layer.stream.resize(stream_len);
        r.raw(layer.stream.data(), stream_len);
        archive.layers.push_back(std::move(layer));
    }
    require(r.remaining() == 0, ErrorCode::corrupt_stream,
            "archive carries trailing bytes");
    return archive;
}

void Archive::write(const std::filesystem::path &path) const {
    const std::vector<std::uint8_t> bytes = serialize();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::io_failure, "cannot open " + path.string());
    out.write(reinterpret_cast<const char *>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    require(out.good(), ErrorCode::io_failure, "write failed for " + path.string());
}

Archive Archive::read(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::missing_file, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    require(!in.bad(), ErrorCode::io_failure, "read failed for " + path.string());
    return parse(bytes);
}

Model Archive::reconstruct() const {
    require(!layers.empty(), ErrorCode::archive_mismatch, "archive has no layers");
    Model model;
    for (const ArchiveLayer &layer : layers) {
        LayerSpec spec;
        spec.name = layer.name;
        spec.kind = LayerKind::dense;
        spec.activation = Activation::identity;
        spec.shape = {1, static_cast<std::uint32_t>(layer.weight_count)};
        spec.bias_count = 0;
        model.layers.push_back(std::move(spec));
        model.weights.push_back(layer.reconstruct());
        model.biases.emplace_back();
    }
    model.validate();
    return model;
}

Model Archive::reconstruct_into(const Model &skeleton) const {
    require(layers.size() == skeleton.layer_count(), ErrorCode::archive_mismatch,
            "archive and skeleton differ in layer count");
    Model model;
    model.layers = skeleton.layers;
    model.biases = skeleton.biases;
    for (const LayerSpec &spec : skeleton.layers) {
        const std::size_t idx = layer_index(spec.name);
        const ArchiveLayer &layer = layers[idx];
        require(layer.weight_count == spec.weight_count(), ErrorCode::archive_mismatch,
                "layer '" + spec.name + "': archive holds " +
                    std::to_string(layer.weight_count) + " weights, skeleton expects " +
                    std::to_string(spec.weight_count()));
        model.weights.push_back(layer.reconstruct());
    }
    model.validate();
    return model;
}

std::size_t Archive::layer_index(std::string_view name) const {
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (layers[i].name == name)
            return i;
    fail(ErrorCode::unknown_layer, "no layer named '" + std::string(name) + "'");
}

std::uint64_t Archive::serialized_bits() const {
    return std::uint64_t{8} * serialize().size();
}

RatioReport compression_ratio(const QuantizedModel &quantized, const Archive &archive) {
    require(!quantized.layers.empty() && quantized.layers.size() == archive.layers.size(),
            ErrorCode::archive_mismatch,
            "archive layer set does not match the quantized model");

    double num = 0.0;
    double est_den = 0.0;
    for (std::size_t i = 0; i < quantized.layers.size(); ++i) {
        const QuantizedLayer &ql = quantized.layers[i];
        const ArchiveLayer &al = archive.layers[i];
        require(al.weight_count == ql.symbols.size(), ErrorCode::archive_mismatch,
                "layer '" + al.name + "' differs in weight count");
        const auto n = static_cast<double>(ql.symbols.size());
        num += 32.0 * n;
        est_den += n * empirical_entropy(ql.symbols) +
                   static_cast<double>(table_bits(al.table));
    }
    RatioReport report;
    report.estimate = num / est_den;
    report.actual = num / static_cast<double>(archive.serialized_bits());
    return report;
}

double estimate_ratio(const QuantizedModel &quantized, unsigned precision) {
    require(!quantized.layers.empty(), ErrorCode::archive_mismatch,
            "quantized model has no layers");
    double num = 0.0;
    double den = 0.0;
    for (const QuantizedLayer &ql : quantized.layers) {
        const auto n = static_cast<double>(ql.symbols.size());
        num += 32.0 * n;
        den += n * empirical_entropy(ql.symbols) +
               static_cast<double>(table_bits(build_table_fitting(ql.symbols, precision)));
    }
    return num / den;
}

} // namespace riq
