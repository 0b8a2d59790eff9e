#include "search.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include "archive.hpp"
#include "errors.hpp"

namespace riq {

SearchBounds k_bounds(const Model &model, double eps0) {
    require(eps0 > 0.0 && eps0 < 1.0, ErrorCode::eps0_out_of_range,
            "the k bounds need eps0 in (0, 1)");
    require(model.layer_count() > 0, ErrorCode::empty_arch, "model has no layers");
    SearchBounds bounds;
    bounds.eps0 = eps0;
    for (const LayerSpec &spec : model.layers)
        bounds.n_star = std::max(bounds.n_star, spec.weight_count());
    const double root = std::sqrt(static_cast<double>(bounds.n_star) / 24.0);
    bounds.k_min = root / (1.0 - eps0);
    bounds.k_max = root / (eps0 * std::sqrt(eps0));
    return bounds;
}

void SearchTrace::write_csv(std::ostream &out) const {
    out << "k,step,deviation,est_ratio,accepted\n";
    out.precision(17);
    for (const SearchEvaluation &e : evaluations)
        out << e.k << ',' << e.step << ',' << e.deviation << ',' << e.est_ratio
            << ',' << (e.accepted ? 1 : 0) << '\n';
}

namespace {

struct Evaluation {
    QuantizedModel quantized;
    double deviation = 0.0;
    double est_ratio = 0.0;
};

Evaluation evaluate_k(const Model &model, const CalibrationSet &calib, double k,
                      double eps0) {
    QuantConfig config;
    config.k = k;
    config.policy = Eps0Policy::constant;
    config.eps0 = eps0;
    Evaluation eval;
    eval.quantized = quantize_model(model, config);
    eval.deviation =
        cosine_deviation(model, eval.quantized.materialize(model), calib)
            .mean_deviation;
    eval.est_ratio = estimate_ratio(eval.quantized);
    return eval;
}

} // namespace

SearchResult riq_search(const Model &model, const CalibrationSet &calib,
                        double deviation_budget, const SearchOptions &options) {
    require(deviation_budget > 0.0 && deviation_budget <= 2.0,
            ErrorCode::budget_out_of_range,
            "deviation budget must lie in (0, 2]");
    // The square-rooted step converges to 1 from above, so a threshold at or
    // below 1 would never be reached.
    require(options.stop_threshold > 1.0, ErrorCode::invalid_argument,
            "stop threshold must exceed 1");
    calib.validate_for(model);
    const SearchBounds bounds = k_bounds(model, options.eps0);

    SearchResult result;
    SearchTrace &trace = result.trace;

    double k = bounds.k_min;
    double k_high = bounds.k_max;
    double step = std::sqrt(bounds.k_max - bounds.k_min);
    std::optional<double> best_k;

    while (k <= k_high) {
        Evaluation eval = evaluate_k(model, calib, k, options.eps0);
        const bool ok = eval.deviation <= deviation_budget;
        trace.evaluations.push_back({k, step, eval.deviation, eval.est_ratio, ok});

        if (ok) {
            best_k = k;
            result.quantized = std::move(eval.quantized);
            if (step <= options.stop_threshold)
                break;
            k_high = k;
            step = std::sqrt(step);
            k -= step * std::floor(step);
            // Probing below the lower bound is pointless: the bound proof
            // keeps any feasible k above it.
            if (k < bounds.k_min)
                k = bounds.k_min;
        } else {
            k += step;
        }
    }

    trace.iterations = trace.evaluations.size();
    if (best_k.has_value()) {
        trace.chosen_k = *best_k;
        trace.satisfied = true;
        return result;
    }

    // Best effort: hand back the floor quantization so callers can inspect
    // the smallest deviation this model admits.
    Evaluation floor_eval = evaluate_k(model, calib, bounds.k_max, options.eps0);
    trace.evaluations.push_back(
        {bounds.k_max, step, floor_eval.deviation, floor_eval.est_ratio, false});
    trace.iterations = trace.evaluations.size();
    trace.chosen_k = bounds.k_max;
    trace.satisfied = false;
    result.quantized = std::move(floor_eval.quantized);
    return result;
}

SearchResult rate_targeted_search(const Model &model, const CalibrationSet &calib,
                                  double target_ratio,
                                  const SearchOptions &options) {
    require(target_ratio > 1.0, ErrorCode::budget_out_of_range,
            "target ratio must exceed 1");
    require(options.stop_threshold > 1.0, ErrorCode::invalid_argument,
            "stop threshold must exceed 1");
    calib.validate_for(model);
    const SearchBounds bounds = k_bounds(model, options.eps0);

    SearchResult result;
    SearchTrace &trace = result.trace;

    // The ratio grows as k shrinks, so the feasible region is [k_min, k_t]
    // and the smallest-deviation choice is its upper edge: run the
    // refinement downward from k_max.
    double k = bounds.k_max;
    double k_low = bounds.k_min;
    double step = std::sqrt(bounds.k_max - bounds.k_min);
    std::optional<double> best_k;

    while (k >= k_low) {
        Evaluation eval = evaluate_k(model, calib, k, options.eps0);
        const bool ok = eval.est_ratio >= target_ratio;
        trace.evaluations.push_back({k, step, eval.deviation, eval.est_ratio, ok});

        if (ok) {
            best_k = k;
            result.quantized = std::move(eval.quantized);
            if (step <= options.stop_threshold)
                break;
            k_low = k;
            step = std::sqrt(step);
            k += step * std::floor(step);
            if (k > bounds.k_max)
                k = bounds.k_max;
        } else {
            const double next = k - step;
            // Land exactly on the lower edge rather than skipping past it;
            // the maximal ratio lives there.
            k = (next < k_low && k > k_low) ? k_low : next;
        }
    }

    trace.iterations = trace.evaluations.size();
    if (best_k.has_value()) {
        trace.chosen_k = *best_k;
        trace.satisfied = true;
        return result;
    }

    Evaluation floor_eval = evaluate_k(model, calib, bounds.k_min, options.eps0);
    trace.evaluations.push_back(
        {bounds.k_min, step, floor_eval.deviation, floor_eval.est_ratio, false});
    trace.iterations = trace.evaluations.size();
    trace.chosen_k = bounds.k_min;
    trace.satisfied = false;
    result.quantized = std::move(floor_eval.quantized);
    return result;
}

} // namespace riq
