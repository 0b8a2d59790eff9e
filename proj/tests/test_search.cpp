#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "archive.hpp"
#include "errors.hpp"
#include "fixtures.hpp"
#include "search.hpp"

using namespace riq;

TEST_CASE("k bounds from the widest layer") {
    // 9600-weight layer, eps0 = 0.01: sqrt(9600/24) = 20.
    Model m;
    LayerSpec spec;
    spec.name = "wide";
    spec.kind = LayerKind::dense;
    spec.activation = Activation::identity;
    spec.shape = {120, 80};
    spec.bias_count = 0;
    m.layers.push_back(spec);
    m.weights.emplace_back(9600, 0.0f);
    m.biases.emplace_back();

    const SearchBounds b = k_bounds(m, 0.01);
    CHECK(b.n_star == 9600);
    CHECK(b.k_min == doctest::Approx(20.0 / 0.99).epsilon(1e-9));
    CHECK(b.k_max == doctest::Approx(20000.0).epsilon(1e-9));
    CHECK(b.k_max == doctest::Approx(1000.0 * std::sqrt(9600.0 / 24.0)).epsilon(1e-9));

    // n* = 24, eps0 = 0.25.
    Model s;
    spec.shape = {4, 6};
    s.layers.push_back(spec);
    s.weights.emplace_back(24, 0.0f);
    s.biases.emplace_back();
    const SearchBounds b2 = k_bounds(s, 0.25);
    CHECK(b2.k_min == doctest::Approx(4.0 / 3.0).epsilon(1e-9));
    CHECK(b2.k_max == doctest::Approx(8.0).epsilon(1e-9));

    CHECK_THROWS_WITH_AS(k_bounds(m, 1.0), doctest::Contains("Eps0OutOfRange"), Error);
    CHECK_THROWS_AS(k_bounds(m, 0.0), Error);
}

TEST_CASE("a vacuous budget accepts the lower bound") {
    const Model m = fixtures::bench_mlp();
    const auto calib = fixtures::bench_calib(m, 4);
    const SearchResult r = riq_search(m, calib, 2.0);
    const SearchBounds b = k_bounds(m, 0.01);
    CHECK(r.trace.satisfied);
    CHECK(r.trace.chosen_k == doctest::Approx(b.k_min).epsilon(1e-12));
    CHECK(r.trace.evaluations.front().accepted);
}

TEST_CASE("accepted solutions satisfy the budget on the returned artifact") {
    const Model m = fixtures::bench_mlp();
    const auto calib = fixtures::bench_calib(m);
    for (double budget : {0.05, 0.005}) {
        const SearchResult r = riq_search(m, calib, budget);
        REQUIRE(r.trace.satisfied);
        const double measured =
            cosine_deviation(m, r.quantized.materialize(m), calib).mean_deviation;
        CHECK(measured <= budget);
        CHECK(r.trace.iterations <= 200);

        // The accepted k is the smallest successful evaluation.
        double min_success = 1e300;
        for (const auto &e : r.trace.evaluations)
            if (e.accepted)
                min_success = std::min(min_success, e.k);
        CHECK(r.trace.chosen_k == doctest::Approx(min_success).epsilon(1e-12));
    }
}

TEST_CASE("the nested refinement lands within one step of a grid scan") {
    const Model m = fixtures::bench_mlp();
    const auto calib = fixtures::bench_calib(m);
    const double budget = 0.005;
    const double threshold = 3.0;

    SearchOptions options;
    options.stop_threshold = threshold;
    const SearchResult r = riq_search(m, calib, budget, options);
    REQUIRE(r.trace.satisfied);

    const SearchBounds b = k_bounds(m, options.eps0);
    QuantConfig cfg;
    cfg.eps0 = options.eps0;
    double grid_best = -1.0;
    for (double k = b.k_min; k <= b.k_max; k += threshold) {
        cfg.k = k;
        const QuantizedModel qm = quantize_model(m, cfg);
        if (cosine_deviation(m, qm.materialize(m), calib).mean_deviation <= budget) {
            grid_best = k;
            break;
        }
    }
    REQUIRE(grid_best > 0.0);
    CHECK(std::abs(r.trace.chosen_k - grid_best) <= threshold);
}

TEST_CASE("unreachable budgets return the floor quantization") {
    const Model m = fixtures::bench_mlp();
    const auto calib = fixtures::bench_calib(m, 4);
    // The eps0 floor keeps a strictly positive deviation; 1e-12 is below it.
    const SearchResult r = riq_search(m, calib, 1e-12);
    CHECK(!r.trace.satisfied);
    const SearchBounds b = k_bounds(m, 0.01);
    CHECK(r.trace.chosen_k == doctest::Approx(b.k_max).epsilon(1e-12));
    CHECK(!r.quantized.layers.empty());
    CHECK(r.trace.iterations <= 200);
    for (const auto &e : r.trace.evaluations)
        CHECK(!e.accepted);
}

TEST_CASE("budget domain is validated") {
    const Model m = fixtures::bench_mlp();
    const auto calib = fixtures::bench_calib(m, 2);
    CHECK_THROWS_WITH_AS(riq_search(m, calib, 0.0),
                         doctest::Contains("BudgetOutOfRange"), Error);
    CHECK_THROWS_AS(riq_search(m, calib, 2.5), Error);

    // Thresholds at or below 1 can never be reached by the sqrt refinement.
    SearchOptions bad;
    bad.stop_threshold = 1.0;
    CHECK_THROWS_AS(riq_search(m, calib, 0.5, bad), Error);
    CHECK_THROWS_AS(rate_targeted_search(m, calib, 4.0, bad), Error);

    // Barely above 1 still terminates.
    SearchOptions fine;
    fine.stop_threshold = 1.001;
    const SearchResult r = riq_search(m, calib, 0.05, fine);
    CHECK(r.trace.satisfied);
    CHECK(r.trace.iterations <= 200);
}

TEST_CASE("deviation scales like 1/k^2 up in the fine regime") {
    const Model m = fixtures::bench_mlp();
    const auto calib = fixtures::bench_calib(m);
    SearchOptions options;
    options.eps0 = 0.01;
    const SearchBounds b = k_bounds(m, options.eps0);

    // Floorless quantization isolates the norm/k width.
    QuantConfig cfg;
    cfg.eps0 = 0.0;
    auto dev_at = [&](double k) {
        cfg.k = k;
        const QuantizedModel qm = quantize_model(m, cfg);
        return cosine_deviation(m, qm.materialize(m), calib).mean_deviation;
    };
    const double k = std::sqrt(b.k_min * b.k_max); // high-rate midpoint
    const double ratio = dev_at(k) / dev_at(2.0 * k);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("rate-targeted mode returns the smallest-deviation feasible k") {
    const Model m = fixtures::bench_mlp();
    const auto calib = fixtures::bench_calib(m);
    const double target = 8.0;

    const SearchResult r = rate_targeted_search(m, calib, target);
    REQUIRE(r.trace.satisfied);
    CHECK(estimate_ratio(r.quantized) >= target);

    // Descending scan for the largest k whose estimate reaches the target;
    // the estimate decreases in k, so bracket at a coarse stride first and
    // refine at the stop resolution inside the bracket.
    const SearchBounds b = k_bounds(m, 0.01);
    QuantConfig cfg;
    cfg.eps0 = 0.01;
    auto ratio_at = [&](double k) {
        cfg.k = k;
        return estimate_ratio(quantize_model(m, cfg));
    };
    double bracket = b.k_min;
    for (double k = b.k_max; k >= b.k_min; k -= 81.0) {
        if (ratio_at(k) >= target) {
            bracket = k;
            break;
        }
    }
    double grid_best = -1.0;
    for (double k = bracket + 81.0; k >= b.k_min; k -= 3.0) {
        if (k <= b.k_max && ratio_at(k) >= target) {
            grid_best = k;
            break;
        }
    }
    REQUIRE(grid_best > 0.0);
    CHECK(std::abs(r.trace.chosen_k - grid_best) <= 2.0 * 3.0);

    // Dominated by the deviation-energy tradeoff: the accepted k is the
    // largest successful evaluation.
    double max_success = -1.0;
    for (const auto &e : r.trace.evaluations)
        if (e.accepted)
            max_success = std::max(max_success, e.k);
    CHECK(r.trace.chosen_k == doctest::Approx(max_success).epsilon(1e-12));
}

TEST_CASE("huge ratio targets collapse to the lower bound") {
    const Model m = fixtures::bench_mlp();
    const auto calib = fixtures::bench_calib(m, 4);
    const SearchBounds b = k_bounds(m, 0.01);

    QuantConfig cfg;
    cfg.k = b.k_min;
    cfg.eps0 = 0.01;
    const double best_ratio = estimate_ratio(quantize_model(m, cfg));

    // Just under the best achievable: only k_min (within a step) qualifies.
    const SearchResult r = rate_targeted_search(m, calib, best_ratio * 0.999);
    REQUIRE(r.trace.satisfied);
    CHECK(r.trace.chosen_k <= b.k_min + 3.0 + 1e-9);

    // Beyond the best achievable: unsatisfiable, floor returned.
    const SearchResult fail = rate_targeted_search(m, calib, best_ratio * 1.2);
    CHECK(!fail.trace.satisfied);
    CHECK(fail.trace.chosen_k == doctest::Approx(b.k_min).epsilon(1e-12));
}

TEST_CASE("ratio targets at or below 1 are rejected") {
    const Model m = fixtures::bench_mlp();
    const auto calib = fixtures::bench_calib(m, 2);
    CHECK_THROWS_WITH_AS(rate_targeted_search(m, calib, 1.0),
                         doctest::Contains("BudgetOutOfRange"), Error);
}

TEST_CASE("traces export as CSV") {
    const Model m = fixtures::bench_mlp();
    const auto calib = fixtures::bench_calib(m, 4);
    const SearchResult r = riq_search(m, calib, 0.05);
    std::ostringstream out;
    r.trace.write_csv(out);
    const std::string csv = out.str();
    CHECK(csv.starts_with("k,step,deviation,est_ratio,accepted\n"));
    std::size_t lines = 0;
    for (char c : csv)
        lines += c == '\n' ? 1 : 0;
    CHECK(lines == r.trace.evaluations.size() + 1);
}
