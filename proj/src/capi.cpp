#include "riq.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <json.hpp>

#include "analysis.hpp"
#include "archive.hpp"
#include "errors.hpp"
#include "forward.hpp"
#include "model.hpp"
#include "quantizer.hpp"
#include "search.hpp"

using nlohmann::json;

struct riq_model {
    riq::Model model;
};

struct riq_calib {
    riq::CalibrationSet calib;
};

namespace {

thread_local std::string t_last_error = "no error";

riq_status status_for(riq::ErrorCode code) {
    using riq::ErrorCode;
    switch (code) {
    case ErrorCode::missing_file:
        return RIQ_ERR_MISSING_FILE;
    case ErrorCode::manifest_mismatch:
        return RIQ_ERR_MANIFEST_MISMATCH;
    case ErrorCode::non_finite_weight:
        return RIQ_ERR_NON_FINITE_WEIGHT;
    case ErrorCode::io_failure:
        return RIQ_ERR_IO;
    case ErrorCode::bad_magic:
    case ErrorCode::version_unsupported:
    case ErrorCode::checksum_mismatch:
    case ErrorCode::corrupt_stream:
    case ErrorCode::archive_mismatch:
        return RIQ_ERR_BAD_ARCHIVE;
    case ErrorCode::unknown_layer:
        return RIQ_ERR_UNKNOWN_LAYER;
    case ErrorCode::unsatisfiable:
        return RIQ_ERR_UNSATISFIABLE;
    case ErrorCode::invalid_argument:
    case ErrorCode::empty_arch:
        return RIQ_ERR_INVALID_ARGUMENT;
    default:
        return RIQ_ERR_DOMAIN;
    }
}

template <typename Fn> riq_status guarded(Fn &&fn) {
    try {
        return fn();
    } catch (const riq::Error &e) {
        t_last_error = e.what();
        return status_for(e.code());
    } catch (const std::exception &e) {
        t_last_error = std::string("Internal: ") + e.what();
        return RIQ_ERR_INTERNAL;
    }
}

riq_status need(bool ok, const char *message) {
    if (ok)
        return RIQ_OK;
    t_last_error = std::string("InvalidArgument: ") + message;
    return RIQ_ERR_INVALID_ARGUMENT;
}

json layer_report(const riq::Model &model, const riq::QuantizedModel &qm,
                  const riq::Archive &archive) {
    json layers = json::array();
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        const riq::QuantizedLayer &ql = qm.layers[i];
        const auto &w = model.weights[i];
        const double norm = riq::l2_norm(w);
        const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
        json jl = {{"name", model.layers[i].name},
                   {"n", w.size()},
                   {"norm", norm},
                   {"delta", ql.delta},
                   {"entropy", riq::empirical_entropy(ql.symbols)},
                   {"table_bits", riq::table_bits(archive.layers[i].table)},
                   {"stream_bytes", archive.layers[i].stream.size()},
                   {"degenerate", ql.degenerate}};
        jl["rate"] = (*hi > *lo && ql.delta > 0.0) ? riq::layer_rate(w, ql.delta) : 0.0;
        jl["distortion"] = ql.degenerate
                               ? 0.0
                               : riq::distortion_from_delta(ql.delta, norm, w.size());
        layers.push_back(std::move(jl));
    }
    return layers;
}

} // namespace

extern "C" {

const char *riq_last_error(void) { return t_last_error.c_str(); }

const char *riq_status_name(riq_status status) {
    switch (status) {
    case RIQ_OK: return "Ok";
    case RIQ_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case RIQ_ERR_MISSING_FILE: return "MissingFile";
    case RIQ_ERR_MANIFEST_MISMATCH: return "ManifestMismatch";
    case RIQ_ERR_NON_FINITE_WEIGHT: return "NonFiniteWeight";
    case RIQ_ERR_IO: return "IoFailure";
    case RIQ_ERR_BAD_ARCHIVE: return "BadArchive";
    case RIQ_ERR_UNKNOWN_LAYER: return "UnknownLayer";
    case RIQ_ERR_UNSATISFIABLE: return "Unsatisfiable";
    case RIQ_ERR_DOMAIN: return "Domain";
    case RIQ_ERR_INTERNAL: return "Internal";
    }
    return "Unknown";
}

void riq_string_free(char *s) { delete[] s; }

riq_status riq_model_load(const char *path, riq_model **out) {
    if (riq_status s = need(path && out, "path and out are required"); s != RIQ_OK)
        return s;
    return guarded([&] {
        auto handle = std::make_unique<riq_model>();
        handle->model = riq::load_model(path);
        *out = handle.release();
        return RIQ_OK;
    });
}

riq_status riq_model_save(const riq_model *model, const char *path) {
    if (riq_status s = need(model && path, "model and path are required"); s != RIQ_OK)
        return s;
    return guarded([&] {
        riq::save_model(model->model, path);
        return RIQ_OK;
    });
}

riq_status riq_model_synth(const char *arch, const char *init, uint64_t seed,
                           riq_model **out) {
    if (riq_status s = need(arch && init && out, "arch, init and out are required");
        s != RIQ_OK)
        return s;
    return guarded([&] {
        riq::InitFamily family;
        if (std::strcmp(init, "gaussian") == 0)
            family = riq::InitFamily::gaussian;
        else if (std::strcmp(init, "uniform") == 0)
            family = riq::InitFamily::uniform;
        else
            riq::fail(riq::ErrorCode::invalid_argument,
                      "init must be 'gaussian' or 'uniform'");
        auto handle = std::make_unique<riq_model>();
        handle->model = riq::synth_model(seed, riq::parse_arch(arch), family);
        *out = handle.release();
        return RIQ_OK;
    });
}

void riq_model_free(riq_model *model) { delete model; }

size_t riq_model_layer_count(const riq_model *model) {
    return model ? model->model.layer_count() : 0;
}

riq_status riq_model_layer_name(const riq_model *model, size_t index, char *buf,
                                size_t buf_size) {
    if (riq_status s = need(model && buf && buf_size > 0, "model and buffer required");
        s != RIQ_OK)
        return s;
    return guarded([&] {
        riq::require(index < model->model.layer_count(),
                     riq::ErrorCode::unknown_layer, "layer index out of range");
        const std::string &name = model->model.layers[index].name;
        const std::size_t n = std::min(buf_size - 1, name.size());
        std::memcpy(buf, name.data(), n);
        buf[n] = '\0';
        return RIQ_OK;
    });
}

riq_status riq_model_layer_weights(const riq_model *model, size_t index,
                                   uint64_t *count_out) {
    if (riq_status s = need(model && count_out, "model and out required"); s != RIQ_OK)
        return s;
    return guarded([&] {
        riq::require(index < model->model.layer_count(),
                     riq::ErrorCode::unknown_layer, "layer index out of range");
        *count_out = model->model.layers[index].weight_count();
        return RIQ_OK;
    });
}

riq_status riq_calib_load(const char *path, riq_calib **out) {
    if (riq_status s = need(path && out, "path and out are required"); s != RIQ_OK)
        return s;
    return guarded([&] {
        auto handle = std::make_unique<riq_calib>();
        handle->calib = riq::CalibrationSet::load(path);
        *out = handle.release();
        return RIQ_OK;
    });
}

riq_status riq_calib_gaussian(const riq_model *model, uint32_t count, uint64_t seed,
                              riq_calib **out) {
    if (riq_status s = need(model && out, "model and out are required"); s != RIQ_OK)
        return s;
    return guarded([&] {
        auto handle = std::make_unique<riq_calib>();
        handle->calib = riq::CalibrationSet::gaussian(model->model, count, seed);
        *out = handle.release();
        return RIQ_OK;
    });
}

riq_status riq_calib_save(const riq_calib *calib, const char *path) {
    if (riq_status s = need(calib && path, "calib and path are required"); s != RIQ_OK)
        return s;
    return guarded([&] {
        calib->calib.save(path);
        return RIQ_OK;
    });
}

void riq_calib_free(riq_calib *calib) { delete calib; }

riq_status riq_deviation(const riq_model *reference, const riq_model *candidate,
                         const riq_calib *calib, double *mean_out, double *max_out) {
    if (riq_status s = need(reference && candidate && calib && mean_out,
                            "reference, candidate, calib and mean_out required");
        s != RIQ_OK)
        return s;
    return guarded([&] {
        const riq::DeviationReport report = riq::cosine_deviation(
            reference->model, candidate->model, calib->calib);
        *mean_out = report.mean_deviation;
        if (max_out)
            *max_out = report.max_deviation;
        return RIQ_OK;
    });
}

void riq_compress_opts_default(riq_compress_opts *opts) {
    if (!opts)
        return;
    opts->deviation_budget = 0.0;
    opts->target_ratio = 0.0;
    opts->eps0 = 0.01;
    opts->stop_threshold = 3.0;
}

riq_status riq_compress(const riq_model *model, const riq_calib *calib,
                        const riq_compress_opts *opts, const char *archive_path,
                        const char *report_path, riq_compress_stats *stats) {
    if (riq_status s = need(model && calib && opts && archive_path,
                            "model, calib, opts and archive_path required");
        s != RIQ_OK)
        return s;
    const bool deviation_mode = opts->deviation_budget > 0.0;
    const bool ratio_mode = opts->target_ratio > 0.0;
    if (riq_status s = need(deviation_mode != ratio_mode,
                            "set exactly one of deviation_budget / target_ratio");
        s != RIQ_OK)
        return s;

    return guarded([&] {
        riq::SearchOptions options;
        options.eps0 = opts->eps0;
        options.stop_threshold = opts->stop_threshold;

        const riq::SearchResult result =
            deviation_mode
                ? riq::riq_search(model->model, calib->calib,
                                  opts->deviation_budget, options)
                : riq::rate_targeted_search(model->model, calib->calib,
                                            opts->target_ratio, options);

        const riq::Archive archive = riq::Archive::build(model->model, result.quantized);
        archive.write(archive_path);

        const riq::RatioReport ratios = riq::compression_ratio(result.quantized, archive);
        const riq::DeviationReport deviation = riq::cosine_deviation(
            model->model, result.quantized.materialize(model->model), calib->calib);

        json report = {
            {"mode", deviation_mode ? "deviation" : "ratio"},
            {"target", deviation_mode ? opts->deviation_budget : opts->target_ratio},
            {"eps0", options.eps0},
            {"stop_threshold", options.stop_threshold},
            {"chosen_k", result.trace.chosen_k},
            {"deviation", deviation.mean_deviation},
            {"max_deviation", deviation.max_deviation},
            {"est_ratio", ratios.estimate},
            {"actual_ratio", ratios.actual},
            {"evaluations", result.trace.iterations},
            {"satisfied", result.trace.satisfied},
            {"layers", layer_report(model->model, result.quantized, archive)},
        };
        const std::string out_path =
            report_path ? report_path : std::string(archive_path) + ".json";
        std::ofstream out(out_path, std::ios::trunc);
        riq::require(out.good(), riq::ErrorCode::io_failure,
                     "cannot write report " + out_path);
        out << report.dump(2) << "\n";
        riq::require(out.good(), riq::ErrorCode::io_failure,
                     "write failed for " + out_path);

        if (stats) {
            stats->chosen_k = result.trace.chosen_k;
            stats->deviation = deviation.mean_deviation;
            stats->max_deviation = deviation.max_deviation;
            stats->est_ratio = ratios.estimate;
            stats->actual_ratio = ratios.actual;
            stats->evaluations = static_cast<uint32_t>(result.trace.iterations);
            stats->satisfied = result.trace.satisfied ? 1 : 0;
        }
        if (!result.trace.satisfied) {
            t_last_error = "Unsatisfiable: no k in the bounds meets the target; "
                           "best-effort archive written";
            return RIQ_ERR_UNSATISFIABLE;
        }
        return RIQ_OK;
    });
}

riq_status riq_decompress(const char *archive_path, const char *skeleton_path,
                          const char *layer_name, riq_model **out) {
    if (riq_status s = need(archive_path && out, "archive_path and out required");
        s != RIQ_OK)
        return s;
    return guarded([&] {
        const riq::Archive archive = riq::Archive::read(archive_path);
        riq::Model full;
        if (skeleton_path)
            full = archive.reconstruct_into(riq::load_model(skeleton_path));
        else
            full = archive.reconstruct();

        auto handle = std::make_unique<riq_model>();
        if (layer_name) {
            const auto idx = full.layer_index(layer_name);
            riq::require(idx.has_value(), riq::ErrorCode::unknown_layer,
                         "no layer named '" + std::string(layer_name) + "'");
            riq::Model single;
            single.layers = {full.layers[*idx]};
            single.weights = {full.weights[*idx]};
            single.biases = {full.biases[*idx]};
            handle->model = std::move(single);
        } else {
            handle->model = std::move(full);
        }
        *out = handle.release();
        return RIQ_OK;
    });
}

riq_status riq_sweep_csv(const riq_model *model, const riq_calib *calib, double k_lo,
                         double k_hi, uint32_t points, double eps0,
                         const char *csv_path) {
    if (riq_status s = need(model && calib && csv_path,
                            "model, calib and csv_path required");
        s != RIQ_OK)
        return s;
    return guarded([&] {
        const std::vector<double> grid = riq::log_spaced(k_lo, k_hi, points);
        const std::vector<riq::SweepPoint> swept =
            riq::sweep(model->model, calib->calib, grid, eps0);
        std::ofstream out(csv_path, std::ios::trunc);
        riq::require(out.good(), riq::ErrorCode::io_failure,
                     "cannot write " + std::string(csv_path));
        riq::write_sweep_csv(out, swept);
        riq::require(out.good(), riq::ErrorCode::io_failure,
                     "write failed for " + std::string(csv_path));
        return RIQ_OK;
    });
}

riq_status riq_analyze(const riq_model *model, const riq_calib *calib, double eps0,
                       const char *out_dir, char **summary_out) {
    if (riq_status s = need(model && calib && out_dir, "model, calib and dir required");
        s != RIQ_OK)
        return s;
    return guarded([&] {
        namespace fs = std::filesystem;
        const fs::path dir(out_dir);
        std::error_code ec;
        fs::create_directories(dir, ec);
        riq::require(!ec, riq::ErrorCode::io_failure,
                     "cannot create " + dir.string());

        const double floor = eps0 > 0.0 ? eps0 : 0.01;
        const riq::SearchBounds bounds = riq::k_bounds(model->model, floor);

        auto write = [&](const fs::path &p, auto &&fn) {
            std::ofstream out(p, std::ios::trunc);
            riq::require(out.good(), riq::ErrorCode::io_failure,
                         "cannot write " + p.string());
            fn(out);
            riq::require(out.good(), riq::ErrorCode::io_failure,
                         "write failed for " + p.string());
        };

        // Full-range sweep with the configured floor.
        const std::vector<double> grid =
            riq::log_spaced(bounds.k_min, bounds.k_max, 16);
        const auto swept = riq::sweep(model->model, calib->calib, grid, eps0);
        write(dir / "sweep.csv",
              [&](std::ostream &out) { riq::write_sweep_csv(out, swept); });

        // Per-layer detail at the geometric-mean parameter.
        const double k_mid = std::sqrt(bounds.k_min * bounds.k_max);
        const double mid_grid[] = {k_mid};
        const auto mid = riq::sweep(model->model, calib->calib, mid_grid, eps0);
        write(dir / "layers.csv", [&](std::ostream &out) {
            riq::write_layers_csv(out, model->model, mid.front());
        });

        // Inverse-square fit on the floorless upper half, where the
        // deviation actually follows the 1/k^2 law.
        const std::vector<double> upper =
            riq::log_spaced(std::sqrt(bounds.k_min * bounds.k_max), bounds.k_max, 16);
        const auto upper_swept = riq::sweep(model->model, calib->calib, upper, 0.0);
        std::vector<std::pair<double, double>> pts;
        for (const auto &p : upper_swept)
            pts.emplace_back(p.k, p.mean_deviation);
        const riq::FitResult fit = riq::fit_inverse_square(pts);
        write(dir / "fit.csv",
              [&](std::ostream &out) { riq::write_fit_csv(out, fit); });

        const int bit_grid[] = {3, 4, 6, 8};
        riq::SearchOptions options;
        options.eps0 = floor;
        const auto uniform =
            riq::compare_uniform(model->model, calib->calib, bit_grid, options);
        write(dir / "uniform.csv",
              [&](std::ostream &out) { riq::write_uniform_csv(out, uniform); });

        if (summary_out) {
            std::ostringstream ss;
            ss.precision(6);
            ss << "bounds: k in [" << bounds.k_min << ", " << bounds.k_max
               << "] (n* = " << bounds.n_star << ", eps0 = " << floor << ")\n";
            ss << "fit: deviation ~ " << fit.a << "/k^2, r^2 = " << fit.r_squared
               << " over k in [" << fit.k_lo << ", " << fit.k_hi << "]\n";
            for (const auto &p : uniform) {
                ss << "uniform " << p.bits << "-bit: deviation " << p.mean_deviation
                   << ", ratio " << p.actual_ratio;
                if (p.matched)
                    ss << " | norm-proportional at same deviation: k = "
                       << p.matched_k << ", ratio " << p.matched_actual_ratio;
                ss << "\n";
            }
            const std::string text = ss.str();
            char *buf = new char[text.size() + 1];
            std::memcpy(buf, text.c_str(), text.size() + 1);
            *summary_out = buf;
        }
        return RIQ_OK;
    });
}

} // extern "C"
