#pragma once

#include <cstdint>
#include <string>

#include "swindet/detect.hpp"
#include "swindet/eval.hpp"
#include "swindet/swin.hpp"

namespace swindet {

/// Everything a pipeline run needs, filled from a declarative config file
/// (INI-style sections) and overridable per key by command-line flags.
struct PipelineConfig {
    std::string scans_dir;
    std::string annotations_csv;
    std::string output_dir;
    std::string weights_file;

    int hu_lo = -1000;
    int hu_hi = 400;
    double margin_factor = 0.5;

    SwinConfig swin;
    DetectorConfig detector;
    EvalConfig eval;

    std::uint64_t seed = 42;
};

/// Strict parser for the documented schema: sections [paths], [preprocess],
/// [swin], [detector], [eval], [run]; unknown sections or keys and
/// malformed values are errors with line numbers. Full-line comments start
/// with '#' or ';'.
PipelineConfig parse_config(const std::string& text);

PipelineConfig load_config(const std::string& path);

/// Value checks that need no filesystem: hu_lo < hu_hi, positive geometry,
/// thresholds in range, top-k counts >= 1.
void validate_config(const PipelineConfig& c);

}  // namespace swindet
