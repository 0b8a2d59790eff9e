#include "quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "errors.hpp"
#include "forward.hpp"

namespace riq {

void QuantConfig::validate() const {
    require(k > 0.0 && !std::isnan(k), ErrorCode::invalid_argument,
            "quantization parameter k must be positive");
    if (policy == Eps0Policy::constant)
        require(eps0 >= 0.0 && eps0 < 1.0, ErrorCode::eps0_out_of_range,
                "eps0 must lie in [0, 1)");
    if (policy == Eps0Policy::per_layer_rbit)
        require(rbits >= 1, ErrorCode::invalid_argument, "rbits must be >= 1");
}

double round_half_even(double x) {
    // remainder(x, 1) is x minus the nearest integer, ties to even.
    return x - std::remainder(x, 1.0);
}

std::vector<float> QuantizedLayer::reconstruct() const {
    std::vector<float> w(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i)
        w[i] = static_cast<float>(static_cast<double>(symbols[i]) * delta);
    return w;
}

Model QuantizedModel::materialize(const Model &source) const {
    require(layers.size() == source.layer_count(), ErrorCode::shape_mismatch,
            "quantized model does not match the source layer count");
    Model out;
    out.layers = source.layers;
    out.biases = source.biases;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        require(layers[i].symbols.size() == source.weights[i].size(),
                ErrorCode::shape_mismatch,
                "quantized layer '" + source.layers[i].name + "' has wrong length");
        out.weights.push_back(layers[i].reconstruct());
    }
    return out;
}

QuantizedLayer quantize_uniform(std::span<const float> w, double delta) {
    require(std::isfinite(delta) && delta > 0.0, ErrorCode::non_positive_delta,
            "bin width must be positive and finite");
    QuantizedLayer layer;
    layer.delta = delta;
    layer.symbols.resize(w.size());
    std::int32_t lo = std::numeric_limits<std::int32_t>::max();
    std::int32_t hi = std::numeric_limits<std::int32_t>::min();
    for (std::size_t i = 0; i < w.size(); ++i) {
        require(std::isfinite(w[i]), ErrorCode::non_finite_weight,
                "weight " + std::to_string(i) + " is not finite");
        const double s = round_half_even(static_cast<double>(w[i]) / delta);
        require(std::abs(s) <= 2147483647.0, ErrorCode::invalid_argument,
                "symbol magnitude overflows 32 bits; bin width too small");
        const auto si = static_cast<std::int32_t>(s);
        layer.symbols[i] = si;
        lo = std::min(lo, si);
        hi = std::max(hi, si);
    }
    if (!w.empty()) {
        layer.min_symbol = lo;
        layer.max_symbol = hi;
    }
    return layer;
}

namespace {

double eps0_for(std::span<const float> w, std::uint64_t n, const QuantConfig &config) {
    switch (config.policy) {
    case Eps0Policy::constant:
        return config.eps0;
    case Eps0Policy::per_layer_rbit:
        return eps0_rbit(w, n, config.rbits);
    case Eps0Policy::per_layer_fd:
        return eps0_fd(w, n);
    }
    return config.eps0;
}

} // namespace

double delta_for_layer(std::span<const float> w, std::uint64_t n,
                       const QuantConfig &config) {
    config.validate();
    require(n > 0 && w.size() == n, ErrorCode::invalid_argument,
            "weight count disagrees with n");
    const double norm = l2_norm(w);
    require(norm > 0.0, ErrorCode::zero_norm_layer,
            "bin width is undefined for a zero-norm layer");
    const double eps0 = eps0_for(w, n, config);
    const double delta =
        norm * (1.0 / config.k + eps0 * std::sqrt(24.0 / static_cast<double>(n)));
    require(std::isfinite(delta) && delta > 0.0, ErrorCode::non_positive_delta,
            "bin width degenerated to zero (k too large with eps0 = 0)");
    return delta;
}

double delta_from_distortion(double eps, double norm, std::uint64_t n) {
    require(eps > 0.0 && eps <= 1.0, ErrorCode::invalid_argument,
            "distortion must lie in (0, 1]");
    require(norm > 0.0, ErrorCode::zero_norm_layer, "norm must be positive");
    require(n > 0, ErrorCode::invalid_argument, "n must be positive");
    return std::sqrt(eps) * norm * std::sqrt(24.0 / static_cast<double>(n));
}

double distortion_from_delta(double delta, double norm, std::uint64_t n) {
    require(delta > 0.0, ErrorCode::non_positive_delta, "delta must be positive");
    require(norm > 0.0, ErrorCode::zero_norm_layer, "norm must be positive");
    return static_cast<double>(n) * delta * delta / (24.0 * norm * norm);
}

double delta_from_sqnr(double eps_rel, double norm, std::uint64_t n) {
    require(eps_rel > 0.0, ErrorCode::invalid_argument,
            "relative error must be positive");
    require(norm > 0.0, ErrorCode::zero_norm_layer, "norm must be positive");
    require(n > 0, ErrorCode::invalid_argument, "n must be positive");
    return eps_rel * norm * std::sqrt(12.0 / static_cast<double>(n));
}

double eps0_rbit(std::span<const float> w, std::uint64_t n, int rbits) {
    require(rbits >= 1, ErrorCode::invalid_argument, "rbits must be >= 1");
    require(n > 0 && w.size() == n, ErrorCode::invalid_argument,
            "weight count disagrees with n");
    const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
    require(*hi > *lo, ErrorCode::degenerate_range,
            "constant layer has no range to spread over R bits");
    const double norm = l2_norm(w);
    require(norm > 0.0, ErrorCode::zero_norm_layer, "norm must be positive");
    const double step = (static_cast<double>(*hi) - static_cast<double>(*lo)) /
                        (std::exp2(rbits) - 1.0);
    return step / std::sqrt(24.0 * norm * norm / static_cast<double>(n));
}

double eps0_fd(std::span<const float> w, std::uint64_t n) {
    require(w.size() == n, ErrorCode::invalid_argument,
            "weight count disagrees with n");
    require(n >= 4, ErrorCode::too_few_samples,
            "quartiles need at least 4 samples");
    std::vector<double> sorted(w.begin(), w.end());
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double p) {
        const double pos = p * static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        if (lo + 1 >= sorted.size())
            return sorted.back();
        return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    return 2.0 * iqr / std::cbrt(static_cast<double>(n));
}

double layer_rate(std::span<const float> w, double delta) {
    require(delta > 0.0, ErrorCode::non_positive_delta, "delta must be positive");
    require(!w.empty(), ErrorCode::empty_input, "rate of an empty layer");
    const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
    require(*hi > *lo, ErrorCode::degenerate_range, "constant layer has no range");
    return std::log2((static_cast<double>(*hi) - static_cast<double>(*lo)) / delta);
}

double empirical_entropy(std::span<const std::int32_t> symbols) {
    require(!symbols.empty(), ErrorCode::empty_input,
            "entropy of an empty symbol stream");
    std::unordered_map<std::int32_t, std::uint64_t> histogram;
    histogram.reserve(1024);
    for (std::int32_t s : symbols)
        ++histogram[s];
    const double n = static_cast<double>(symbols.size());
    double h = 0.0;
    for (const auto &[sym, count] : histogram) {
        const double p = static_cast<double>(count) / n;
        h -= p * std::log2(p);
    }
    return std::max(h, 0.0);
}

QuantizedModel quantize_model(const Model &model, const QuantConfig &config) {
    config.validate();
    model.validate();
    QuantizedModel qm;
    qm.config = config;
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        const auto &w = model.weights[i];
        if (l2_norm(w) == 0.0) {
            // Degenerate layer: keep it loadable with a unit sentinel width.
            QuantizedLayer layer;
            layer.delta = 1.0;
            layer.symbols.assign(w.size(), 0);
            layer.degenerate = true;
            qm.layers.push_back(std::move(layer));
            continue;
        }
        try {
            const double delta = delta_for_layer(w, w.size(), config);
            qm.layers.push_back(quantize_uniform(w, delta));
        } catch (const Error &e) {
            fail(e.code(), "layer '" + model.layers[i].name + "': " + e.what());
        }
    }
    return qm;
}

} // namespace riq
