#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "model.hpp"

namespace riq {

enum class Eps0Policy {
    constant,       // one eps0 shared by all layers
    per_layer_rbit, // eps0 chosen so the k->inf bin width hits the R-bit step
    per_layer_fd,   // eps0 from the Freedman-Diaconis histogram rule
};

struct QuantConfig {
    double k = 1.0; // single parameter shared by all layers; +inf is allowed
    Eps0Policy policy = Eps0Policy::constant;
    double eps0 = 0.01;
    int rbits = 8; // used by per_layer_rbit

    void validate() const;
};

struct QuantizedLayer {
    double delta = 1.0;
    std::vector<std::int32_t> symbols;
    std::int32_t min_symbol = 0;
    std::int32_t max_symbol = 0;
    // Set for layers the width rule cannot handle (zero norm, or zero range
    // in the range-based path); such layers carry a sentinel lattice that
    // reconstructs their constant value exactly.
    bool degenerate = false;

    // Nominal fp32 values symbols[i]*delta.
    std::vector<float> reconstruct() const;
};

struct QuantizedModel {
    std::vector<QuantizedLayer> layers;
    QuantConfig config;

    // Model with the source topology and biases but quantized weights.
    Model materialize(const Model &source) const;
};

// Round half to even, independent of the FP environment.
double round_half_even(double x);

// symbols[i] = round(w[i]/delta), reconstruction symbols[i]*delta.
QuantizedLayer quantize_uniform(std::span<const float> w, double delta);

// delta = ||w|| * (1/k + eps0 * sqrt(24/n)) with eps0 per the config policy.
double delta_for_layer(std::span<const float> w, std::uint64_t n,
                       const QuantConfig &config);

// delta = sqrt(eps) * norm * sqrt(24/n); the bin width whose asymptotic
// cosine distortion is eps.
double delta_from_distortion(double eps, double norm, std::uint64_t n);
double distortion_from_delta(double delta, double norm, std::uint64_t n);

// delta = eps_rel * norm * sqrt(12/n); relative-error (SQNR) flavor.
double delta_from_sqnr(double eps_rel, double norm, std::uint64_t n);

// eps0 such that the k->inf bin width equals (max-min)/(2^R - 1).
double eps0_rbit(std::span<const float> w, std::uint64_t n, int rbits);

// eps0 = 2*IQR(w)/cbrt(n), quartiles by linear interpolation.
double eps0_fd(std::span<const float> w, std::uint64_t n);

// R = log2((max(w)-min(w))/delta) bits/symbol; real-valued.
double layer_rate(std::span<const float> w, double delta);

// Shannon entropy of the symbol histogram, bits/symbol.
double empirical_entropy(std::span<const std::int32_t> symbols);

QuantizedModel quantize_model(const Model &model, const QuantConfig &config);

} // namespace riq
