#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "forward.hpp"
#include "model.hpp"
#include "quantizer.hpp"

namespace riq {

// Bracket for the shared quantization parameter, derived from the layer
// with the most weights:
//   sqrt(n*/24)/(1-eps0) <= k* <= sqrt(n*/24)/(eps0*sqrt(eps0)).
struct SearchBounds {
    double k_min = 0.0;
    double k_max = 0.0;
    std::uint64_t n_star = 0;
    double eps0 = 0.0;
};

SearchBounds k_bounds(const Model &model, double eps0);

struct SearchEvaluation {
    double k = 0.0;
    double step = 0.0;
    double deviation = 0.0;
    double est_ratio = 0.0;
    bool accepted = false; // predicate held at this k
};

struct SearchTrace {
    std::vector<SearchEvaluation> evaluations;
    double chosen_k = 0.0;
    std::size_t iterations = 0;
    bool satisfied = false;

    // CSV columns: k, step, deviation, est_ratio, accepted.
    void write_csv(std::ostream &out) const;
};

struct SearchResult {
    QuantizedModel quantized;
    SearchTrace trace;
};

struct SearchOptions {
    double eps0 = 0.01;
    double stop_threshold = 3.0;
};

// Nested-refinement search for the smallest k whose mean output deviation
// stays within `deviation_budget`. Walks up from k_min in sqrt-sized steps;
// each time the budget holds the range shrinks to [.., k] and the step is
// square-rooted, until it drops to the stop threshold. When even k_max
// cannot meet the budget the k_max quantization is returned with
// trace.satisfied = false.
SearchResult riq_search(const Model &model, const CalibrationSet &calib,
                        double deviation_budget, const SearchOptions &options = {});

// Dual mode: the smallest-deviation (largest) k whose estimated compression
// ratio still reaches target_ratio. Same refinement skeleton run downward
// from k_max.
SearchResult rate_targeted_search(const Model &model, const CalibrationSet &calib,
                                  double target_ratio,
                                  const SearchOptions &options = {});

} // namespace riq
