#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "app.hpp"

using swindet::PipelineConfig;

namespace {

struct Overrides {
    std::string config_path;
    std::string scans_dir;
    std::string annotations;
    std::string output_dir;
    std::string weights_file;
    std::uint64_t seed = 0;
    int hu_lo = 0;
    int hu_hi = 0;
    double margin = 0.0;
    int img_size = 0;

    void attach(CLI::App* sub) {
        sub->add_option("--config", config_path, "config file (INI-style sections)");
        sub->add_option("--scans-dir", scans_dir, "directory of .mhd/.raw volumes");
        sub->add_option("--annotations", annotations, "nodule annotations CSV");
        sub->add_option("--output-dir", output_dir, "artifact directory");
        sub->add_option("--weights", weights_file, "weights archive path");
        sub->add_option("--seed", seed, "seed for generated weights");
        sub->add_option("--hu-lo", hu_lo, "window lower bound (HU)");
        sub->add_option("--hu-hi", hu_hi, "window upper bound (HU)");
        sub->add_option("--margin", margin, "slice matching margin factor");
        sub->add_option("--img-size", img_size, "model input side in pixels");
    }

    PipelineConfig build(const CLI::App* sub) const {
        PipelineConfig cfg;
        if (!config_path.empty()) cfg = swindet::load_config(config_path);
        if (sub->count("--scans-dir")) cfg.scans_dir = scans_dir;
        if (sub->count("--annotations")) cfg.annotations_csv = annotations;
        if (sub->count("--output-dir")) cfg.output_dir = output_dir;
        if (sub->count("--weights")) cfg.weights_file = weights_file;
        if (sub->count("--seed")) cfg.seed = seed;
        if (sub->count("--hu-lo")) cfg.hu_lo = hu_lo;
        if (sub->count("--hu-hi")) cfg.hu_hi = hu_hi;
        if (sub->count("--margin")) cfg.margin_factor = margin;
        if (sub->count("--img-size")) cfg.swin.img_size = img_size;
        return cfg;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"2D CT lung nodule detector"};
    cli.require_subcommand(1);

    Overrides opts;

    CLI::App* pre = cli.add_subcommand(
        "preprocess", "extract nodule-bearing slices to PGM + COCO JSON");
    opts.attach(pre);

    CLI::App* infer = cli.add_subcommand(
        "infer", "run the detector over preprocessed slices");
    opts.attach(infer);
    bool seed_weights = false;
    infer->add_flag("--seed-weights", seed_weights,
                    "generate a deterministic archive from the seed");

    CLI::App* eval = cli.add_subcommand("eval", "score results against ground truth");
    opts.attach(eval);
    std::string gt_path, results_path;
    eval->add_option("--gt", gt_path, "ground-truth JSON (default: output dataset)");
    eval->add_option("--results", results_path,
                     "detection results JSON (default: output results)");

    CLI::App* bench = cli.add_subcommand(
        "bench", "time per-slice inference and count parameters");
    opts.attach(bench);
    int runs = 5;
    bench->add_option("--runs", runs, "timed runs (minimum 5)");

    CLI::App* selftest = cli.add_subcommand("selftest", "run the embedded oracle suites");
    bool perturb = false;
    selftest->add_flag("--perturb", perturb,
                       "corrupt one kernel comparison (exercises the failure path)");

    CLI11_PARSE(cli, argc, argv);

    try {
        if (pre->parsed()) {
            return swindet::app::cmd_preprocess(opts.build(pre), std::cout, std::cerr);
        }
        if (infer->parsed()) {
            return swindet::app::cmd_infer(opts.build(infer), seed_weights, std::cout,
                                           std::cerr);
        }
        if (eval->parsed()) {
            return swindet::app::cmd_eval(opts.build(eval), gt_path, results_path,
                                          std::cout, std::cerr);
        }
        if (bench->parsed()) {
            return swindet::app::cmd_bench(opts.build(bench), runs, std::cout, std::cerr);
        }
        if (selftest->parsed()) {
            return swindet::app::run_selftest(std::cout, perturb);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
