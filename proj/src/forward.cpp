#include "forward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "binio.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace riq {

using nlohmann::json;

double l2_norm(std::span<const float> v) {
    double s = 0.0;
    for (float x : v)
        s += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(s);
}

double dot_f64(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

void CalibrationSet::validate() const {
    require(!samples.empty(), ErrorCode::empty_input, "calibration set is empty");
    std::size_t n = 1;
    for (std::size_t d : shape)
        n *= d;
    require(!shape.empty() && n > 0, ErrorCode::shape_mismatch,
            "calibration shape is empty");
    for (const auto &s : samples) {
        require(s.size() == n, ErrorCode::shape_mismatch,
                "calibration sample length does not match declared shape");
        for (float v : s)
            require(std::isfinite(v), ErrorCode::non_finite_weight,
                    "calibration sample holds a non-finite value");
    }
}

void CalibrationSet::validate_for(const Model &model) const {
    validate();
    const auto want = model.input_shape();
    std::size_t n_want = 1, n_have = 1;
    for (std::size_t d : want)
        n_want *= d;
    for (std::size_t d : shape)
        n_have *= d;
    require(n_want == n_have, ErrorCode::shape_mismatch,
            "calibration samples have " + std::to_string(n_have) +
                " elements, model expects " + std::to_string(n_want));
}

Tensor CalibrationSet::sample(std::size_t i) const {
    Tensor t;
    t.shape = shape;
    t.data.assign(samples.at(i).begin(), samples.at(i).end());
    return t;
}

CalibrationSet CalibrationSet::gaussian(const Model &model, std::size_t count,
                                        std::uint64_t seed) {
    require(count >= 1, ErrorCode::empty_input, "calibration count must be >= 1");
    CalibrationSet set;
    set.shape = model.input_shape();
    std::size_t n = 1;
    for (std::size_t d : set.shape)
        n *= d;
    Rng rng(seed);
    for (std::size_t s = 0; s < count; ++s) {
        std::vector<float> x(n);
        for (float &v : x)
            v = static_cast<float>(rng.gaussian());
        set.samples.push_back(std::move(x));
    }
    return set;
}

CalibrationSet CalibrationSet::load(const std::filesystem::path &path) {
    require(std::filesystem::exists(path), ErrorCode::missing_file,
            "no calibration blob at " + path.string());
    const std::filesystem::path sidecar = path.string() + ".json";
    require(std::filesystem::exists(sidecar), ErrorCode::missing_file,
            "missing calibration sidecar " + sidecar.string());

    CalibrationSet set;
    std::size_t count = 0;
    try {
        std::ifstream in(sidecar);
        const json j = json::parse(in);
        count = j.at("count").get<std::size_t>();
        set.shape = j.at("shape").get<std::vector<std::size_t>>();
    } catch (const json::exception &e) {
        fail(ErrorCode::manifest_mismatch,
             "calibration sidecar does not parse: " + std::string(e.what()));
    }
    std::size_t n = 1;
    for (std::size_t d : set.shape)
        n *= d;

    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::missing_file, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    require(bytes.size() == 4 * count * n, ErrorCode::manifest_mismatch,
            "calibration blob size does not match sidecar");
    ByteReader r(bytes, ErrorCode::manifest_mismatch, "calibration blob");
    for (std::size_t s = 0; s < count; ++s) {
        std::vector<float> x(n);
        for (float &v : x)
            v = r.f32();
        set.samples.push_back(std::move(x));
    }
    set.validate();
    return set;
}

void CalibrationSet::save(const std::filesystem::path &path) const {
    validate();
    ByteWriter blob;
    for (const auto &s : samples)
        for (float v : s)
            blob.f32(v);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::io_failure, "cannot open " + path.string());
    out.write(reinterpret_cast<const char *>(blob.bytes().data()),
              static_cast<std::streamsize>(blob.size()));
    require(out.good(), ErrorCode::io_failure, "write failed for " + path.string());

    const json j = {{"count", samples.size()}, {"shape", shape}};
    std::ofstream side(path.string() + ".json", std::ios::trunc);
    require(side.good(), ErrorCode::io_failure, "cannot write calibration sidecar");
    side << j.dump(2) << "\n";
}

namespace {

void apply_activation(std::vector<double> &v, Activation act) {
    if (act == Activation::relu)
        for (double &x : v)
            x = std::max(x, 0.0);
}

// y[o] = b[o] + sum_i W[o,i] x[i]
std::vector<double> dense_forward(const LayerSpec &spec,
                                  std::span<const float> w,
                                  std::span<const float> b,
                                  const std::vector<double> &x) {
    const std::size_t out = spec.shape[0];
    const std::size_t in = spec.shape[1];
    require(x.size() == in, ErrorCode::shape_mismatch,
            "layer '" + spec.name + "': input has " + std::to_string(x.size()) +
                " elements, expected " + std::to_string(in));
    std::vector<double> y(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
        double acc = o < b.size() ? static_cast<double>(b[o]) : 0.0;
        const float *row = w.data() + o * in;
        for (std::size_t i = 0; i < in; ++i)
            acc += static_cast<double>(row[i]) * x[i];
        y[o] = acc;
    }
    return y;
}

// Valid cross-correlation over [ic, h, w] input.
std::vector<double> conv2d_forward(const LayerSpec &spec,
                                   std::span<const float> w,
                                   std::span<const float> b,
                                   const std::vector<double> &x,
                                   std::vector<std::size_t> &io_shape) {
    require(io_shape.size() == 3, ErrorCode::shape_mismatch,
            "layer '" + spec.name + "': conv2d needs a [channels, h, w] input");
    const std::size_t oc = spec.shape[0], ic = spec.shape[1];
    const std::size_t kh = spec.shape[2], kw = spec.shape[3];
    const std::size_t h = io_shape[1], wl = io_shape[2];
    require(io_shape[0] == ic, ErrorCode::shape_mismatch,
            "layer '" + spec.name + "': input channel mismatch");
    require(h >= kh && wl >= kw, ErrorCode::shape_mismatch,
            "layer '" + spec.name + "': input smaller than kernel");
    const std::size_t oh = h - kh + 1, ow = wl - kw + 1;

    std::vector<double> y(oc * oh * ow, 0.0);
    for (std::size_t o = 0; o < oc; ++o) {
        const double bias = o < b.size() ? static_cast<double>(b[o]) : 0.0;
        for (std::size_t i = 0; i < oh; ++i)
            for (std::size_t j = 0; j < ow; ++j) {
                double acc = bias;
                for (std::size_t c = 0; c < ic; ++c)
                    for (std::size_t u = 0; u < kh; ++u)
                        for (std::size_t v = 0; v < kw; ++v)
                            acc += static_cast<double>(
                                       w[((o * ic + c) * kh + u) * kw + v]) *
                                   x[(c * h + i + u) * wl + j + v];
                y[(o * oh + i) * ow + j] = acc;
            }
    }
    io_shape = {oc, oh, ow};
    return y;
}

} // namespace

std::vector<double> forward(const Model &model, const Tensor &input) {
    std::vector<double> v = input.data;
    std::vector<std::size_t> shape = input.shape;
    require(v.size() == input.element_count(), ErrorCode::shape_mismatch,
            "input tensor data does not match its shape");

    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const LayerSpec &spec = model.layers[i];
        if (spec.kind == LayerKind::dense) {
            v = dense_forward(spec, model.weights[i], model.biases[i], v);
            shape = {v.size()};
        } else {
            if (shape.size() != 3 && v.size() == spec.shape[1] * std::size_t{spec.shape[2]} * spec.shape[3])
                shape = {spec.shape[1], spec.shape[2], spec.shape[3]};
            v = conv2d_forward(spec, model.weights[i], model.biases[i], v, shape);
        }
        apply_activation(v, spec.activation);
    }
    return v;
}

Distortion layer_distortion(std::span<const float> w, std::span<const float> w_hat) {
    require(w.size() == w_hat.size(), ErrorCode::shape_mismatch,
            "distortion operands differ in length");
    const double na = l2_norm(w);
    const double nb = l2_norm(w_hat);
    require(na > 0.0 && nb > 0.0, ErrorCode::zero_vector,
            "distortion is undefined for a zero vector");
    const double cosv = dot_f64(w, w_hat) / (na * nb);
    Distortion d;
    d.eps = 1.0 - cosv;
    d.angle = std::acos(std::clamp(1.0 - d.eps, -1.0, 1.0));
    return d;
}

DeviationReport cosine_deviation(const Model &reference, const Model &candidate,
                                 const CalibrationSet &calib) {
    require(reference.layer_count() == candidate.layer_count(),
            ErrorCode::shape_mismatch, "models differ in depth");
    for (std::size_t i = 0; i < reference.layer_count(); ++i)
        require(reference.layers[i].same_topology(candidate.layers[i]),
                ErrorCode::shape_mismatch,
                "models differ at layer '" + reference.layers[i].name + "'");
    calib.validate_for(reference);

    DeviationReport report;
    for (std::size_t s = 0; s < calib.size(); ++s) {
        const Tensor x = calib.sample(s);
        const std::vector<double> a = forward(reference, x);
        const std::vector<double> b = forward(candidate, x);
        double naa = 0.0, nbb = 0.0, ab = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            naa += a[i] * a[i];
            nbb += b[i] * b[i];
            ab += a[i] * b[i];
        }
        require(naa > 0.0 && nbb > 0.0, ErrorCode::zero_output_norm,
                "zero model output for calibration sample " + std::to_string(s));
        report.per_sample.push_back(1.0 - ab / (std::sqrt(naa) * std::sqrt(nbb)));
    }
    double sum = 0.0;
    for (double d : report.per_sample) {
        sum += d;
        report.max_deviation = std::max(report.max_deviation, d);
    }
    report.mean_deviation = sum / static_cast<double>(report.per_sample.size());

    for (std::size_t i = 0; i < reference.layer_count(); ++i) {
        const auto &w = reference.weights[i];
        const auto &q = candidate.weights[i];
        const double nw = l2_norm(w), nq = l2_norm(q);
        double eps = 0.0;
        if (nw > 0.0 && nq > 0.0)
            eps = 1.0 - dot_f64(w, q) / (nw * nq);
        else if (nw != nq)
            eps = 1.0; // one side degenerate: report as orthogonal
        report.per_layer_distortion.push_back(eps);
        report.per_layer_angle.push_back(std::acos(std::clamp(1.0 - eps, -1.0, 1.0)));
    }
    return report;
}

} // namespace riq
