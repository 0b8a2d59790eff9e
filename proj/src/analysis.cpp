#include "analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "archive.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace riq {

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
    require(lo > 0.0 && hi >= lo, ErrorCode::invalid_argument,
            "log grid needs 0 < lo <= hi");
    require(count >= 1, ErrorCode::invalid_argument, "empty grid");
    std::vector<double> grid(count);
    if (count == 1) {
        grid[0] = lo;
        return grid;
    }
    const double ratio = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i)
        grid[i] = lo * std::exp(ratio * static_cast<double>(i));
    grid.back() = hi;
    return grid;
}

std::vector<SweepPoint> sweep(const Model &model, const CalibrationSet &calib,
                              std::span<const double> k_grid, double eps0) {
    require(!k_grid.empty(), ErrorCode::invalid_argument, "empty sweep grid");
    require(std::is_sorted(k_grid.begin(), k_grid.end()), ErrorCode::invalid_argument,
            "sweep grid must ascend");
    const SearchBounds bounds = k_bounds(model, eps0 > 0.0 ? eps0 : 0.01);
    const double slack = 1e-9;
    require(k_grid.front() >= bounds.k_min * (1.0 - slack) &&
                k_grid.back() <= bounds.k_max * (1.0 + slack),
            ErrorCode::invalid_argument,
            "sweep grid leaves the k bounds [" + std::to_string(bounds.k_min) + ", " +
                std::to_string(bounds.k_max) + "]");
    calib.validate_for(model);

    std::vector<SweepPoint> points;
    for (double k : k_grid) {
        QuantConfig config;
        config.k = k;
        config.eps0 = eps0;
        const QuantizedModel qm = quantize_model(model, config);

        SweepPoint point;
        point.k = k;
        point.mean_deviation =
            cosine_deviation(model, qm.materialize(model), calib).mean_deviation;

        double weighted_entropy = 0.0;
        double total_n = 0.0;
        for (std::size_t i = 0; i < qm.layers.size(); ++i) {
            const QuantizedLayer &ql = qm.layers[i];
            const auto &w = model.weights[i];
            point.delta.push_back(ql.delta);
            point.distortion.push_back(
                ql.degenerate ? 0.0
                             : distortion_from_delta(ql.delta, l2_norm(w), w.size()));
            const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
            point.rate.push_back(*hi > *lo ? layer_rate(w, ql.delta) : 0.0);
            const double h = empirical_entropy(ql.symbols);
            point.entropy.push_back(h);
            weighted_entropy += h * static_cast<double>(w.size());
            total_n += static_cast<double>(w.size());
        }
        point.mean_entropy = weighted_entropy / total_n;

        const Archive archive = Archive::build(model, qm);
        const RatioReport ratios = compression_ratio(qm, archive);
        point.est_ratio = ratios.estimate;
        point.actual_ratio = ratios.actual;
        points.push_back(std::move(point));
    }
    return points;
}

FitResult fit_inverse_square(std::span<const std::pair<double, double>> points) {
    require(points.size() >= 3, ErrorCode::invalid_argument,
            "the fit needs at least 3 points");
    FitResult fit;
    fit.k_lo = points.front().first;
    fit.k_hi = points.front().first;

    double sxx = 0.0, sxy = 0.0, sy = 0.0;
    for (const auto &[k, y] : points) {
        require(k > 0.0, ErrorCode::invalid_argument, "fit needs positive k");
        fit.k_lo = std::min(fit.k_lo, k);
        fit.k_hi = std::max(fit.k_hi, k);
        const double x = 1.0 / (k * k);
        sxx += x * x;
        sxy += x * y;
        sy += y;
    }
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            require(points[i].first != points[j].first, ErrorCode::invalid_argument,
                    "fit needs distinct k values");

    const double mean = sy / static_cast<double>(points.size());
    double ss_tot = 0.0;
    for (const auto &[k, y] : points)
        ss_tot += (y - mean) * (y - mean);
    require(ss_tot > 1e-16 * mean * mean * static_cast<double>(points.size()) &&
                ss_tot > 0.0,
            ErrorCode::degenerate_fit, "deviation data carries no variance");

    fit.a = sxy / sxx;
    require(fit.a >= 0.0, ErrorCode::degenerate_fit,
            "negative coefficient; data does not follow 1/k^2");
    double ss_res = 0.0;
    for (const auto &[k, y] : points) {
        const double r = y - fit.a / (k * k);
        ss_res += r * r;
    }
    fit.r_squared = 1.0 - ss_res / ss_tot;
    return fit;
}

Corollary2Result check_corollary2(const Model &model, const QuantizedModel &quantized) {
    require(quantized.layers.size() == model.layer_count(), ErrorCode::shape_mismatch,
            "quantized model does not match the source");
    Corollary2Result result;

    double dot_all = 0.0, nw_all = 0.0, nq_all = 0.0;
    double convex = 0.0;
    std::vector<double> cos_l(model.layer_count());
    std::vector<double> nw2(model.layer_count());
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        const auto &w = model.weights[i];
        const std::vector<float> q = quantized.layers[i].reconstruct();
        double dot = 0.0, a2 = 0.0, b2 = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double wv = w[j], qv = q[j];
            dot += wv * qv;
            a2 += wv * wv;
            b2 += qv * qv;
        }
        require(a2 > 0.0 && b2 > 0.0, ErrorCode::zero_vector,
                "zero-norm layer in the composition check");
        cos_l[i] = dot / (std::sqrt(a2) * std::sqrt(b2));
        nw2[i] = a2;
        result.max_distortion = std::max(result.max_distortion, 1.0 - cos_l[i]);
        dot_all += dot;
        nw_all += a2;
        nq_all += b2;
    }
    const double cos_all = dot_all / (std::sqrt(nw_all) * std::sqrt(nq_all));
    for (std::size_t i = 0; i < model.layer_count(); ++i)
        convex += nw2[i] / nw_all * cos_l[i];
    result.residual = std::abs(cos_all - convex);
    result.in_regime = result.max_distortion <= 1e-3;
    return result;
}

QuantizedModel quantize_uniform_bits(const Model &model, int bits) {
    require(bits >= 1, ErrorCode::invalid_argument, "bit width must be >= 1");
    model.validate();
    QuantizedModel qm;
    qm.config.k = std::numeric_limits<double>::infinity();
    qm.config.policy = Eps0Policy::per_layer_rbit;
    qm.config.rbits = bits;
    for (const auto &w : model.weights) {
        const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
        if (!(*hi > *lo)) {
            // Constant layer: carry its single value on a sentinel lattice.
            const float c = w.empty() ? 0.0f : w.front();
            QuantizedLayer layer;
            layer.delta = c == 0.0f ? 1.0 : std::abs(static_cast<double>(c));
            layer.symbols.assign(w.size(), c == 0.0f ? 0 : (c > 0.0f ? 1 : -1));
            layer.min_symbol = layer.max_symbol = w.empty() ? 0 : layer.symbols[0];
            layer.degenerate = true;
            qm.layers.push_back(std::move(layer));
            continue;
        }
        const double delta = (static_cast<double>(*hi) - static_cast<double>(*lo)) /
                             (std::exp2(bits) - 1.0);
        qm.layers.push_back(quantize_uniform(w, delta));
    }
    return qm;
}

std::vector<UniformPoint> compare_uniform(const Model &model,
                                          const CalibrationSet &calib,
                                          std::span<const int> bit_grid,
                                          const SearchOptions &options) {
    require(!bit_grid.empty(), ErrorCode::invalid_argument, "empty bit grid");
    calib.validate_for(model);

    std::vector<UniformPoint> points;
    for (int bits : bit_grid) {
        require(bits >= 1, ErrorCode::invalid_argument, "bit width must be >= 1");
        UniformPoint point;
        point.bits = bits;

        const QuantizedModel qm = quantize_uniform_bits(model, bits);
        for (std::size_t i = 0; i < qm.layers.size(); ++i)
            if (qm.layers[i].degenerate)
                point.skipped_layers.push_back(model.layers[i].name);
        point.mean_deviation =
            cosine_deviation(model, qm.materialize(model), calib).mean_deviation;

        double weighted = 0.0, total = 0.0;
        for (const QuantizedLayer &ql : qm.layers) {
            weighted += empirical_entropy(ql.symbols) *
                        static_cast<double>(ql.symbols.size());
            total += static_cast<double>(ql.symbols.size());
        }
        point.mean_entropy = weighted / total;

        const Archive archive = Archive::build(model, qm);
        const RatioReport ratios = compression_ratio(qm, archive);
        point.est_ratio = ratios.estimate;
        point.actual_ratio = ratios.actual;

        // Norm-proportional run at the deviation this bit width produced.
        if (point.mean_deviation > 0.0 && point.mean_deviation <= 2.0) {
            const SearchResult matched =
                riq_search(model, calib, point.mean_deviation, options);
            if (matched.trace.satisfied) {
                point.matched = true;
                point.matched_k = matched.trace.chosen_k;
                const Archive matched_archive = Archive::build(model, matched.quantized);
                const RatioReport matched_ratios =
                    compression_ratio(matched.quantized, matched_archive);
                point.matched_est_ratio = matched_ratios.estimate;
                point.matched_actual_ratio = matched_ratios.actual;
            }
        }
        points.push_back(std::move(point));
    }
    return points;
}

std::vector<double> random_rotation(std::size_t n, std::uint64_t seed) {
    require(n >= 1, ErrorCode::invalid_argument, "rotation dimension must be >= 1");
    require(n <= 512, ErrorCode::dimension_too_large,
            "rotation generator is capped at n = 512");

    Rng rng(seed);
    std::vector<double> a(n * n);
    for (double &v : a)
        v = rng.gaussian();

    // Householder QR; Q is accumulated explicitly.
    std::vector<double> q(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        q[i * n + i] = 1.0;

    std::vector<double> v(n);
    for (std::size_t col = 0; col < n; ++col) {
        double norm2 = 0.0;
        for (std::size_t r = col; r < n; ++r) {
            v[r] = a[r * n + col];
            norm2 += v[r] * v[r];
        }
        const double norm = std::sqrt(norm2);
        if (norm == 0.0)
            continue;
        v[col] += v[col] >= 0.0 ? norm : -norm;
        double vnorm2 = 0.0;
        for (std::size_t r = col; r < n; ++r)
            vnorm2 += v[r] * v[r];
        if (vnorm2 == 0.0)
            continue;

        // a <- (I - 2 v v^T / v^T v) a ; q <- q (I - 2 v v^T / v^T v)
        for (std::size_t c = col; c < n; ++c) {
            double dot = 0.0;
            for (std::size_t r = col; r < n; ++r)
                dot += v[r] * a[r * n + c];
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t r = col; r < n; ++r)
                a[r * n + c] -= f * v[r];
        }
        for (std::size_t r = 0; r < n; ++r) {
            double dot = 0.0;
            for (std::size_t c = col; c < n; ++c)
                dot += q[r * n + c] * v[c];
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t c = col; c < n; ++c)
                q[r * n + c] -= f * v[c];
        }
    }
    return q;
}

std::vector<double> apply_rotation(std::span<const double> matrix,
                                   std::span<const float> v) {
    const std::size_t n = v.size();
    require(matrix.size() == n * n, ErrorCode::shape_mismatch,
            "rotation matrix does not match the vector length");
    std::vector<double> out(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < n; ++c)
            acc += matrix[r * n + c] * static_cast<double>(v[c]);
        out[r] = acc;
    }
    return out;
}

void write_sweep_csv(std::ostream &out, std::span<const SweepPoint> points) {
    out << "k,deviation,mean_entropy,est_ratio,actual_ratio\n";
    out.precision(17);
    for (const SweepPoint &p : points)
        out << p.k << ',' << p.mean_deviation << ',' << p.mean_entropy << ','
            << p.est_ratio << ',' << p.actual_ratio << '\n';
}

void write_layers_csv(std::ostream &out, const Model &model, const SweepPoint &point) {
    out << "layer,n,norm,delta,eps,rate,entropy\n";
    out.precision(17);
    for (std::size_t i = 0; i < model.layer_count(); ++i)
        out << model.layers[i].name << ',' << model.weights[i].size() << ','
            << l2_norm(model.weights[i]) << ',' << point.delta[i] << ','
            << point.distortion[i] << ',' << point.rate[i] << ','
            << point.entropy[i] << '\n';
}

void write_fit_csv(std::ostream &out, const FitResult &fit) {
    out << "a,r2\n";
    out.precision(17);
    out << fit.a << ',' << fit.r_squared << '\n';
}

void write_uniform_csv(std::ostream &out, std::span<const UniformPoint> points) {
    out << "bits,deviation,mean_entropy,est_ratio,actual_ratio,matched_k,"
           "matched_est_ratio,matched_actual_ratio\n";
    out.precision(17);
    for (const UniformPoint &p : points)
        out << p.bits << ',' << p.mean_deviation << ',' << p.mean_entropy << ','
            << p.est_ratio << ',' << p.actual_ratio << ',' << p.matched_k << ','
            << p.matched_est_ratio << ',' << p.matched_actual_ratio << '\n';
}

} // namespace riq
