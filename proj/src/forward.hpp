#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "model.hpp"

namespace riq {

struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (std::size_t d : shape)
            n *= d;
        return n;
    }
};

// Inputs used to measure output deviation. Samples are stored flat in f32
// (the on-disk convention); evaluation promotes to f64.
struct CalibrationSet {
    std::vector<std::size_t> shape;
    std::vector<std::vector<float>> samples;

    std::size_t size() const { return samples.size(); }
    void validate() const;
    void validate_for(const Model &model) const;
    Tensor sample(std::size_t i) const;

    static CalibrationSet gaussian(const Model &model, std::size_t count,
                                   std::uint64_t seed);
    // Blob of count*prod(shape) little-endian f32 plus a "<path>.json"
    // sidecar {"count":..,"shape":[..]}.
    static CalibrationSet load(const std::filesystem::path &path);
    void save(const std::filesystem::path &path) const;
};

// Deterministic forward pass. Dense layers compute Wx+b, conv2d layers a
// valid cross-correlation; both apply the declared activation. All
// accumulation is in f64.
std::vector<double> forward(const Model &model, const Tensor &input);

struct DeviationReport {
    std::vector<double> per_sample;
    double mean_deviation = 0.0;
    double max_deviation = 0.0;
    std::vector<double> per_layer_distortion; // cosine distance per layer
    std::vector<double> per_layer_angle;      // radians
};

// Mean cosine distance between the outputs of `reference` and `candidate`
// over the calibration set; also reports per-layer weight distortions.
DeviationReport cosine_deviation(const Model &reference, const Model &candidate,
                                 const CalibrationSet &calib);

struct Distortion {
    double eps;   // 1 - cos(angle)
    double angle; // radians
};

Distortion layer_distortion(std::span<const float> w, std::span<const float> w_hat);

double l2_norm(std::span<const float> v);
double dot_f64(std::span<const float> a, std::span<const float> b);

} // namespace riq
