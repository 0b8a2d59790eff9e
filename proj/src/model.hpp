#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace riq {

enum class LayerKind { dense, conv2d };
enum class Activation { relu, identity };

const char *to_string(LayerKind kind);
const char *to_string(Activation act);
LayerKind layer_kind_from(std::string_view name);
Activation activation_from(std::string_view name);

// Static description of one layer. Shapes are row-major:
// dense [out, in], conv2d [out_ch, in_ch, kh, kw].
struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::dense;
    Activation activation = Activation::identity;
    std::vector<std::uint32_t> shape;
    std::uint64_t bias_count = 0;

    std::uint64_t weight_count() const;
    std::uint64_t fan_in() const;
    void validate(std::size_t index) const;
    bool same_topology(const LayerSpec &other) const;
};

// Layered weight model with a flat f32 weight vector per layer, flattened
// row-major over the declared shape. Biases are carried alongside but kept
// out of the quantization path.
struct Model {
    std::vector<LayerSpec> layers;
    std::vector<std::vector<float>> weights;
    std::vector<std::vector<float>> biases;

    std::size_t layer_count() const { return layers.size(); }
    void validate() const;
    std::vector<std::size_t> input_shape() const;
    std::optional<std::size_t> layer_index(std::string_view name) const;
};

// Container layout (.riqm): a directory holding manifest.json and
// weights.bin. The blob stores, for each layer in manifest order, the
// weights then the biases as little-endian f32.
Model load_model(const std::filesystem::path &path);
void save_model(const Model &model, const std::filesystem::path &path);

struct ArchLayer {
    LayerKind kind = LayerKind::dense;
    Activation activation = Activation::identity;
    std::vector<std::uint32_t> shape;
};

enum class InitFamily { gaussian, uniform };

// Deterministic random model: weights and biases drawn i.i.d., gaussian
// N(0, 1/fan_in) or uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Model synth_model(std::uint64_t seed, const std::vector<ArchLayer> &arch,
                  InitFamily init);

// "dense:OUT,IN[,act];conv2d:OC,IC,KH,KW[,act];..." -> arch list.
std::vector<ArchLayer> parse_arch(std::string_view text);

} // namespace riq
