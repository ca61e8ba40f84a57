#pragma once

#include <ostream>
#include <string>

#include "swindet/config.hpp"
#include "swindet/preprocess.hpp"

namespace swindet::app {

/// Loads every .mhd volume under scans_dir, extracts nodule-bearing slices,
/// writes PGMs, the COCO dataset JSON and a manifest CSV to output_dir.
/// Returns 0 on success; volumes that fail to parse are logged and turn the
/// exit code nonzero.
int cmd_preprocess(const PipelineConfig& cfg, std::ostream& out, std::ostream& err);

/// Runs the detector on every image of output_dir/dataset.json and writes
/// output_dir/results.json. Weights come from cfg.weights_file, or are
/// generated deterministically from cfg.seed when seed_weights is set (and
/// written to cfg.weights_file when that path is nonempty).
int cmd_infer(const PipelineConfig& cfg, bool seed_weights, std::ostream& out,
              std::ostream& err);

/// Scores results against ground truth, prints the report table and writes
/// report.json and histogram.csv to output_dir. Empty paths default to
/// output_dir/dataset.json and output_dir/results.json.
int cmd_eval(const PipelineConfig& cfg, const std::string& gt_path,
             const std::string& results_path, std::ostream& out, std::ostream& err);

/// Times detect() on a seeded synthetic slice (median of `runs` passes) and
/// reports the archive parameter count.
int cmd_bench(const PipelineConfig& cfg, int runs, std::ostream& out, std::ostream& err);

/// Embedded oracle suites (IoU, NMS, AP, RoIAlign, delta coding, shapes).
/// perturb_kernel deliberately corrupts one kernel comparison so the
/// failure path is exercisable. Returns 0 only if every suite passes.
int run_selftest(std::ostream& out, bool perturb_kernel = false);

/// 12-bit slice to model input: [3,H,W], pixels scaled to [0,1] and
/// replicated across the three channels.
Tensor slice_to_input(const SliceImage& s);

}  // namespace swindet::app
