#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "forward.hpp"
#include "model.hpp"
#include "quantizer.hpp"
#include "search.hpp"

namespace riq {

struct SweepPoint {
    double k = 0.0;
    double mean_deviation = 0.0;
    std::vector<double> delta;      // per layer
    std::vector<double> distortion; // per layer cosine distance
    std::vector<double> rate;       // per layer bits/symbol
    std::vector<double> entropy;    // per layer bits/symbol
    double mean_entropy = 0.0;      // weight-count weighted
    double est_ratio = 0.0;
    double actual_ratio = 0.0;
};

// One point per grid value; grid must be ascending and stay inside the k
// bounds for eps0 (or for the default 0.01 floor when eps0 is 0).
std::vector<SweepPoint> sweep(const Model &model, const CalibrationSet &calib,
                              std::span<const double> k_grid, double eps0);

struct FitResult {
    double a = 0.0;         // least-squares coefficient of y = a/k^2
    double r_squared = 0.0; // 1 - SS_res/SS_tot
    double k_lo = 0.0;
    double k_hi = 0.0;
};

// Least squares of deviation against 1/k^2 through the origin.
FitResult fit_inverse_square(std::span<const std::pair<double, double>> points);

struct Corollary2Result {
    double residual = 0.0;       // |cos(theta_all) - sum_l w_l cos(theta_l)|
    double max_distortion = 0.0; // largest per-layer cosine distance
    bool in_regime = false;      // all distortions <= 1e-3
};

// Convex-combination identity between the whole-parameter rotation and the
// per-layer rotations; meaningful in the small-distortion regime.
Corollary2Result check_corollary2(const Model &model, const QuantizedModel &quantized);

struct UniformPoint {
    int bits = 0;
    double mean_deviation = 0.0;
    double mean_entropy = 0.0;
    double est_ratio = 0.0;
    double actual_ratio = 0.0;
    bool matched = false; // a norm-proportional run hit the same deviation
    double matched_k = 0.0;
    double matched_est_ratio = 0.0;
    double matched_actual_ratio = 0.0;
    std::vector<std::string> skipped_layers; // degenerate range
};

// Range-based quantization at each bit width, paired with a
// norm-proportional search run at the deviation the uniform grid produced.
std::vector<UniformPoint> compare_uniform(const Model &model,
                                          const CalibrationSet &calib,
                                          std::span<const int> bit_grid,
                                          const SearchOptions &options = {});

// Range-based counterpart of quantize_model: delta = (max-min)/(2^bits - 1)
// per layer. Layers without a range keep the unit-width sentinel.
QuantizedModel quantize_uniform_bits(const Model &model, int bits);

// Orthogonal n x n matrix (row-major) from the QR factorization of a seeded
// gaussian matrix. n is capped at 512.
std::vector<double> random_rotation(std::size_t n, std::uint64_t seed);

std::vector<double> apply_rotation(std::span<const double> matrix,
                                   std::span<const float> v);

std::vector<double> log_spaced(double lo, double hi, std::size_t count);

void write_sweep_csv(std::ostream &out, std::span<const SweepPoint> points);
void write_layers_csv(std::ostream &out, const Model &model, const SweepPoint &point);
void write_fit_csv(std::ostream &out, const FitResult &fit);
void write_uniform_csv(std::ostream &out, std::span<const UniformPoint> points);

} // namespace riq
