// riq command line: compress / decompress / sweep / analyze / synth.
// Everything goes through the C API in riq.h; this translation unit holds
// only flag parsing and exit-code policy (0 ok, 1 error, 2 unsatisfiable).

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "riq.h"

namespace {

struct ModelHandle {
    riq_model *ptr = nullptr;
    ~ModelHandle() { riq_model_free(ptr); }
};

struct CalibHandle {
    riq_calib *ptr = nullptr;
    ~CalibHandle() { riq_calib_free(ptr); }
};

int fail_with(riq_status status) {
    std::fprintf(stderr, "riq: %s\n", riq_last_error());
    return status == RIQ_ERR_UNSATISFIABLE ? 2 : 1;
}

bool parse_gauss_spec(const std::string &spec, uint32_t &count, uint64_t &seed) {
    const auto comma = spec.find(',');
    try {
        if (comma == std::string::npos) {
            count = static_cast<uint32_t>(std::stoul(spec));
            seed = 0;
        } else {
            count = static_cast<uint32_t>(std::stoul(spec.substr(0, comma)));
            seed = std::stoull(spec.substr(comma + 1));
        }
    } catch (const std::exception &) {
        return false;
    }
    return count >= 1;
}

// Loads --calib when given, otherwise draws the gaussian default
// (4 samples, seed 0) or the user's --gauss-calib N,SEED.
riq_status make_calib(const ModelHandle &model, const std::string &calib_path,
                      const std::string &gauss_spec, CalibHandle &out) {
    if (!calib_path.empty())
        return riq_calib_load(calib_path.c_str(), &out.ptr);
    uint32_t count = 4;
    uint64_t seed = 0;
    if (!gauss_spec.empty() && !parse_gauss_spec(gauss_spec, count, seed)) {
        std::fprintf(stderr, "riq: InvalidArgument: --gauss-calib expects N or N,SEED\n");
        return RIQ_ERR_INVALID_ARGUMENT;
    }
    return riq_calib_gaussian(model.ptr, count, seed, &out.ptr);
}

bool parse_grid(const std::string &spec, double &lo, double &hi, uint32_t &points) {
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        return false;
    try {
        lo = std::stod(spec.substr(0, c1));
        hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
        points = static_cast<uint32_t>(std::stoul(spec.substr(c2 + 1)));
    } catch (const std::exception &) {
        return false;
    }
    return lo > 0 && hi >= lo && points >= 1;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"norm-proportional model quantization and entropy coding"};
    app.require_subcommand(1);

    // --- compress ---
    auto *compress = app.add_subcommand("compress", "search k, quantize and entropy-code");
    std::string c_model, c_out, c_calib, c_gauss, c_report;
    double c_deviation = 0.0, c_ratio = 0.0, c_eps0 = 0.01, c_stop = 3.0;
    compress->add_option("--model", c_model, "model container (.riqm)")->required();
    compress->add_option("--out", c_out, "archive to write (.rqz)")->required();
    compress->add_option("--calib", c_calib, "calibration blob (with .json sidecar)");
    compress->add_option("--gauss-calib", c_gauss, "gaussian calibration: N or N,SEED");
    auto *dev_opt = compress->add_option("--deviation", c_deviation,
                                         "output deviation budget in (0,2]");
    auto *ratio_opt = compress->add_option("--target-ratio", c_ratio,
                                           "compression ratio target (> 1)");
    compress->add_option("--eps0", c_eps0, "bin-width floor constant (default 0.01)");
    compress->add_option("--stop-threshold", c_stop, "search resolution, > 1 (default 3)");
    compress->add_option("--report", c_report, "report JSON path (default <out>.json)");
    dev_opt->excludes(ratio_opt);

    // --- decompress ---
    auto *decompress = app.add_subcommand("decompress", "reconstruct fp32 weights");
    std::string d_in, d_out, d_layer, d_skeleton;
    decompress->add_option("--in", d_in, "archive (.rqz)")->required();
    decompress->add_option("--out", d_out, "model container to write (.riqm)")->required();
    decompress->add_option("--layer", d_layer, "decode a single layer by name");
    decompress->add_option("--model", d_skeleton,
                           "original container supplying topology and biases");

    // --- sweep ---
    auto *sweep = app.add_subcommand("sweep", "rate-distortion sweep to CSV");
    std::string s_model, s_out, s_calib, s_gauss, s_grid;
    double s_eps0 = 0.01;
    sweep->add_option("--model", s_model, "model container (.riqm)")->required();
    sweep->add_option("--grid", s_grid, "log-spaced grid lo:hi:n")->required();
    sweep->add_option("--out", s_out, "CSV to write")->required();
    sweep->add_option("--calib", s_calib, "calibration blob");
    sweep->add_option("--gauss-calib", s_gauss, "gaussian calibration: N or N,SEED");
    sweep->add_option("--eps0", s_eps0, "bin-width floor constant");

    // --- analyze ---
    auto *analyze = app.add_subcommand("analyze", "sweep + fit + uniform comparison");
    std::string a_model, a_out, a_calib, a_gauss;
    double a_eps0 = 0.01;
    analyze->add_option("--model", a_model, "model container (.riqm)")->required();
    analyze->add_option("--out", a_out, "output directory")->required();
    analyze->add_option("--calib", a_calib, "calibration blob");
    analyze->add_option("--gauss-calib", a_gauss, "gaussian calibration: N or N,SEED");
    analyze->add_option("--eps0", a_eps0, "bin-width floor constant");

    // --- synth ---
    auto *synth = app.add_subcommand("synth", "write a seeded random model");
    std::string y_arch, y_init = "gaussian", y_out;
    uint64_t y_seed = 0;
    synth->add_option("--arch", y_arch,
                      "layers, e.g. dense:128,64,relu;dense:16,128,identity")
        ->required();
    synth->add_option("--out", y_out, "model container to write (.riqm)")->required();
    synth->add_option("--seed", y_seed, "RNG seed (default 0)");
    synth->add_option("--init", y_init, "gaussian (default) or uniform");

    CLI11_PARSE(app, argc, argv);

    if (compress->parsed()) {
        if (c_deviation <= 0.0 && c_ratio <= 0.0) {
            std::fprintf(stderr,
                         "riq: InvalidArgument: pass --deviation or --target-ratio\n");
            return 1;
        }
        if (c_out == c_model) {
            std::fprintf(stderr, "riq: InvalidArgument: --out must differ from --model\n");
            return 1;
        }
        ModelHandle model;
        if (riq_status s = riq_model_load(c_model.c_str(), &model.ptr); s != RIQ_OK)
            return fail_with(s);
        CalibHandle calib;
        if (riq_status s = make_calib(model, c_calib, c_gauss, calib); s != RIQ_OK)
            return fail_with(s);

        riq_compress_opts opts;
        riq_compress_opts_default(&opts);
        opts.deviation_budget = c_deviation;
        opts.target_ratio = c_ratio;
        opts.eps0 = c_eps0;
        opts.stop_threshold = c_stop;

        riq_compress_stats stats;
        const riq_status s = riq_compress(model.ptr, calib.ptr, &opts, c_out.c_str(),
                                          c_report.empty() ? nullptr : c_report.c_str(),
                                          &stats);
        if (s != RIQ_OK && s != RIQ_ERR_UNSATISFIABLE)
            return fail_with(s);
        std::printf("k = %.6f  deviation = %.6g  ratio = x%.3f (est x%.3f)  "
                    "evaluations = %u%s\n",
                    stats.chosen_k, stats.deviation, stats.actual_ratio,
                    stats.est_ratio, stats.evaluations,
                    stats.satisfied ? "" : "  [best effort: target unsatisfiable]");
        return s == RIQ_OK ? 0 : 2;
    }

    if (decompress->parsed()) {
        if (d_in == d_out) {
            std::fprintf(stderr, "riq: InvalidArgument: --out must differ from --in\n");
            return 1;
        }
        ModelHandle model;
        const riq_status s = riq_decompress(
            d_in.c_str(), d_skeleton.empty() ? nullptr : d_skeleton.c_str(),
            d_layer.empty() ? nullptr : d_layer.c_str(), &model.ptr);
        if (s != RIQ_OK)
            return fail_with(s);
        if (riq_status w = riq_model_save(model.ptr, d_out.c_str()); w != RIQ_OK)
            return fail_with(w);
        std::printf("wrote %s (%zu layer%s)\n", d_out.c_str(),
                    riq_model_layer_count(model.ptr),
                    riq_model_layer_count(model.ptr) == 1 ? "" : "s");
        return 0;
    }

    if (sweep->parsed()) {
        double lo = 0, hi = 0;
        uint32_t points = 0;
        if (!parse_grid(s_grid, lo, hi, points)) {
            std::fprintf(stderr, "riq: InvalidArgument: --grid expects lo:hi:n\n");
            return 1;
        }
        ModelHandle model;
        if (riq_status s = riq_model_load(s_model.c_str(), &model.ptr); s != RIQ_OK)
            return fail_with(s);
        CalibHandle calib;
        if (riq_status s = make_calib(model, s_calib, s_gauss, calib); s != RIQ_OK)
            return fail_with(s);
        if (riq_status s = riq_sweep_csv(model.ptr, calib.ptr, lo, hi, points, s_eps0,
                                         s_out.c_str());
            s != RIQ_OK)
            return fail_with(s);
        std::printf("wrote %s (%u points)\n", s_out.c_str(), points);
        return 0;
    }

    if (analyze->parsed()) {
        ModelHandle model;
        if (riq_status s = riq_model_load(a_model.c_str(), &model.ptr); s != RIQ_OK)
            return fail_with(s);
        CalibHandle calib;
        if (riq_status s = make_calib(model, a_calib, a_gauss, calib); s != RIQ_OK)
            return fail_with(s);
        char *summary = nullptr;
        if (riq_status s = riq_analyze(model.ptr, calib.ptr, a_eps0, a_out.c_str(),
                                       &summary);
            s != RIQ_OK)
            return fail_with(s);
        if (summary) {
            std::fputs(summary, stdout);
            riq_string_free(summary);
        }
        std::printf("wrote %s/{sweep,layers,fit,uniform}.csv\n", a_out.c_str());
        return 0;
    }

    if (synth->parsed()) {
        ModelHandle model;
        if (riq_status s = riq_model_synth(y_arch.c_str(), y_init.c_str(), y_seed,
                                           &model.ptr);
            s != RIQ_OK)
            return fail_with(s);
        if (riq_status s = riq_model_save(model.ptr, y_out.c_str()); s != RIQ_OK)
            return fail_with(s);
        std::printf("wrote %s\n", y_out.c_str());
        return 0;
    }
    return 0;
}
