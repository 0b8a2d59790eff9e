#include "model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "binio.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace riq {

using nlohmann::json;

const char *to_string(LayerKind kind) {
    return kind == LayerKind::dense ? "dense" : "conv2d";
}

const char *to_string(Activation act) {
    return act == Activation::relu ? "relu" : "identity";
}

LayerKind layer_kind_from(std::string_view name) {
    if (name == "dense")
        return LayerKind::dense;
    if (name == "conv2d")
        return LayerKind::conv2d;
    fail(ErrorCode::manifest_mismatch, "unknown layer kind '" + std::string(name) + "'");
}

Activation activation_from(std::string_view name) {
    if (name == "relu")
        return Activation::relu;
    if (name == "identity")
        return Activation::identity;
    fail(ErrorCode::manifest_mismatch, "unknown activation '" + std::string(name) + "'");
}

std::uint64_t LayerSpec::weight_count() const {
    std::uint64_t n = 1;
    for (std::uint32_t d : shape)
        n *= d;
    return n;
}

std::uint64_t LayerSpec::fan_in() const {
    if (kind == LayerKind::dense)
        return shape.at(1);
    return std::uint64_t{shape.at(1)} * shape.at(2) * shape.at(3);
}

void LayerSpec::validate(std::size_t index) const {
    const std::string where = "layer " + std::to_string(index) + " ('" + name + "')";
    require(!name.empty(), ErrorCode::manifest_mismatch, where + ": empty name");
    const std::size_t arity = kind == LayerKind::dense ? 2 : 4;
    require(shape.size() == arity, ErrorCode::manifest_mismatch,
            where + ": " + std::string(to_string(kind)) + " layers take " +
                std::to_string(arity) + " shape entries, got " +
                std::to_string(shape.size()));
    for (std::uint32_t d : shape)
        require(d > 0, ErrorCode::manifest_mismatch, where + ": zero shape entry");
}

bool LayerSpec::same_topology(const LayerSpec &other) const {
    return kind == other.kind && activation == other.activation &&
           shape == other.shape && bias_count == other.bias_count;
}

void Model::validate() const {
    require(!layers.empty(), ErrorCode::manifest_mismatch, "model has no layers");
    require(weights.size() == layers.size() && biases.size() == layers.size(),
            ErrorCode::manifest_mismatch, "weight/bias arrays out of step with layers");
    std::set<std::string> names;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec &spec = layers[i];
        spec.validate(i);
        require(names.insert(spec.name).second, ErrorCode::manifest_mismatch,
                "duplicate layer name '" + spec.name + "'");
        require(weights[i].size() == spec.weight_count(), ErrorCode::manifest_mismatch,
                "layer '" + spec.name + "': weight vector length " +
                    std::to_string(weights[i].size()) + " != shape product " +
                    std::to_string(spec.weight_count()));
        require(biases[i].size() == spec.bias_count, ErrorCode::manifest_mismatch,
                "layer '" + spec.name + "': bias vector length mismatch");
        for (float v : weights[i])
            require(std::isfinite(v), ErrorCode::non_finite_weight,
                    "layer '" + spec.name + "' holds a non-finite weight");
        for (float v : biases[i])
            require(std::isfinite(v), ErrorCode::non_finite_weight,
                    "layer '" + spec.name + "' holds a non-finite bias");
    }
}

std::vector<std::size_t> Model::input_shape() const {
    require(!layers.empty(), ErrorCode::manifest_mismatch, "model has no layers");
    const LayerSpec &first = layers.front();
    if (first.kind == LayerKind::dense)
        return {first.shape[1]};
    // Minimal valid spatial extent: one kernel footprint.
    return {first.shape[1], first.shape[2], first.shape[3]};
}

std::optional<std::size_t> Model::layer_index(std::string_view name) const {
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (layers[i].name == name)
            return i;
    return std::nullopt;
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::missing_file, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    require(!in.bad(), ErrorCode::io_failure, "read failed for " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path &path,
                std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::io_failure, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char *>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    require(out.good(), ErrorCode::io_failure, "write failed for " + path.string());
}

std::vector<float> take_f32(ByteReader &r, std::uint64_t count) {
    std::vector<float> v(count);
    for (std::uint64_t i = 0; i < count; ++i)
        v[i] = r.f32();
    return v;
}

} // namespace

Model load_model(const std::filesystem::path &path) {
    require(std::filesystem::exists(path), ErrorCode::missing_file,
            "no model container at " + path.string());
    const auto manifest_path = path / "manifest.json";
    const auto blob_path = path / "weights.bin";
    require(std::filesystem::exists(manifest_path), ErrorCode::missing_file,
            "missing " + manifest_path.string());
    require(std::filesystem::exists(blob_path), ErrorCode::missing_file,
            "missing " + blob_path.string());

    json manifest;
    try {
        std::ifstream in(manifest_path);
        manifest = json::parse(in);
    } catch (const json::exception &e) {
        fail(ErrorCode::manifest_mismatch,
             "manifest does not parse: " + std::string(e.what()));
    }

    Model model;
    try {
        require(manifest.at("version").get<int>() == 1, ErrorCode::manifest_mismatch,
                "unsupported container version");
        for (const json &jl : manifest.at("layers")) {
            LayerSpec spec;
            spec.name = jl.at("name").get<std::string>();
            spec.kind = layer_kind_from(jl.at("kind").get<std::string>());
            spec.activation = activation_from(jl.at("activation").get<std::string>());
            spec.shape = jl.at("shape").get<std::vector<std::uint32_t>>();
            spec.bias_count = jl.at("bias_count").get<std::uint64_t>();
            spec.validate(model.layers.size());
            if (jl.contains("weight_count"))
                require(jl.at("weight_count").get<std::uint64_t>() == spec.weight_count(),
                        ErrorCode::manifest_mismatch,
                        "layer '" + spec.name +
                            "': declared weight_count disagrees with shape product");
            model.layers.push_back(std::move(spec));
        }
    } catch (const json::exception &e) {
        fail(ErrorCode::manifest_mismatch, "bad manifest field: " + std::string(e.what()));
    }

    const std::vector<std::uint8_t> blob = read_file(blob_path);
    std::uint64_t expected = 0;
    for (const LayerSpec &spec : model.layers)
        expected += 4 * (spec.weight_count() + spec.bias_count);
    require(blob.size() == expected, ErrorCode::manifest_mismatch,
            "weights.bin holds " + std::to_string(blob.size()) +
                " bytes, manifest declares " + std::to_string(expected));

    ByteReader r(blob, ErrorCode::manifest_mismatch, "weights.bin");
    for (const LayerSpec &spec : model.layers) {
        model.weights.push_back(take_f32(r, spec.weight_count()));
        model.biases.push_back(take_f32(r, spec.bias_count));
    }
    model.validate();
    return model;
}

void save_model(const Model &model, const std::filesystem::path &path) {
    model.validate();

    json layers = json::array();
    for (const LayerSpec &spec : model.layers) {
        layers.push_back({{"name", spec.name},
                          {"kind", to_string(spec.kind)},
                          {"activation", to_string(spec.activation)},
                          {"shape", spec.shape},
                          {"bias_count", spec.bias_count},
                          {"weight_count", spec.weight_count()}});
    }
    const json manifest = {{"version", 1}, {"layers", layers}};

    ByteWriter blob;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        for (float v : model.weights[i])
            blob.f32(v);
        for (float v : model.biases[i])
            blob.f32(v);
    }

    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    require(!ec, ErrorCode::io_failure, "cannot create " + path.string());

    const std::string text = manifest.dump(2) + "\n";
    std::vector<std::uint8_t> manifest_bytes(text.begin(), text.end());
    write_file(path / "manifest.json", manifest_bytes);
    write_file(path / "weights.bin", blob.bytes());
}

Model synth_model(std::uint64_t seed, const std::vector<ArchLayer> &arch,
                  InitFamily init) {
    require(!arch.empty(), ErrorCode::empty_arch, "architecture list is empty");

    Model model;
    Rng rng(seed);
    for (std::size_t i = 0; i < arch.size(); ++i) {
        LayerSpec spec;
        spec.name = "l" + std::to_string(i);
        spec.kind = arch[i].kind;
        spec.activation = arch[i].activation;
        spec.shape = arch[i].shape;
        spec.bias_count = arch[i].shape.at(0);
        spec.validate(i);

        const double scale = 1.0 / std::sqrt(static_cast<double>(spec.fan_in()));
        auto draw = [&]() {
            return init == InitFamily::gaussian
                       ? static_cast<float>(scale * rng.gaussian())
                       : static_cast<float>(rng.uniform(-scale, scale));
        };
        std::vector<float> w(spec.weight_count());
        for (float &v : w)
            v = draw();
        std::vector<float> b(spec.bias_count);
        for (float &v : b)
            v = draw();

        model.layers.push_back(std::move(spec));
        model.weights.push_back(std::move(w));
        model.biases.push_back(std::move(b));
    }
    model.validate();
    return model;
}

std::vector<ArchLayer> parse_arch(std::string_view text) {
    std::vector<ArchLayer> arch;
    std::stringstream ss{std::string(text)};
    std::string part;
    while (std::getline(ss, part, ';')) {
        if (part.empty())
            continue;
        const auto colon = part.find(':');
        require(colon != std::string::npos, ErrorCode::invalid_argument,
                "arch entry '" + part + "' lacks kind:dims");
        ArchLayer layer;
        const std::string kind = part.substr(0, colon);
        if (kind == "dense")
            layer.kind = LayerKind::dense;
        else if (kind == "conv2d")
            layer.kind = LayerKind::conv2d;
        else
            fail(ErrorCode::invalid_argument, "unknown layer kind '" + kind + "'");

        std::stringstream dims{part.substr(colon + 1)};
        std::string tok;
        std::vector<std::string> toks;
        while (std::getline(dims, tok, ','))
            toks.push_back(tok);
        const std::size_t arity = layer.kind == LayerKind::dense ? 2u : 4u;
        require(toks.size() == arity || toks.size() == arity + 1,
                ErrorCode::invalid_argument, "arch entry '" + part + "' has wrong arity");
        for (std::size_t i = 0; i < arity; ++i) {
            long v = 0;
            try {
                v = std::stol(toks[i]);
            } catch (const std::exception &) {
                fail(ErrorCode::invalid_argument, "bad dimension '" + toks[i] + "'");
            }
            require(v > 0, ErrorCode::invalid_argument, "dimensions must be positive");
            layer.shape.push_back(static_cast<std::uint32_t>(v));
        }
        if (toks.size() == arity + 1) {
            if (toks[arity] == "relu")
                layer.activation = Activation::relu;
            else if (toks[arity] == "identity")
                layer.activation = Activation::identity;
            else
                fail(ErrorCode::invalid_argument,
                     "unknown activation '" + toks[arity] + "'");
        }
        arch.push_back(std::move(layer));
    }
    require(!arch.empty(), ErrorCode::empty_arch, "architecture list is empty");
    return arch;
}

} // namespace riq
