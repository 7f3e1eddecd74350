#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qinpaint/imaging/mask.hpp"
#include "qinpaint/metrics.hpp"
#include "qinpaint/qnn/network.hpp"
#include "qinpaint/train/optimize.hpp"

namespace qinpaint::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kSuccess = 0, kUsage = 1, kRuntime = 2 };

const char* engine_version();

struct MaskSource {
    enum class Kind { File, Random, Structural };
    Kind kind = Kind::Random;
    fs::path path;  // Kind::File
    double sr = 0.1;  // Kind::Random
    imaging::StructuralPattern pattern = imaging::StructuralPattern::ScratchLines;
    imaging::StructuralParams structural{};
};

/// Everything needed to reproduce one inpainting run.
struct InpaintRequest {
    fs::path input;
    fs::path output;
    fs::path loss_trace;
    fs::path manifest;
    std::optional<fs::path> ground_truth;
    std::optional<fs::path> mask_output;
    MaskSource mask;
    std::uint64_t seed = 0;
    train::TrainConfig train{};
    qnn::NetworkSpec network = qnn::default_spec();
    bool pad_reflect = false;
    int threads = 1;
};

struct InpaintOutcome {
    std::vector<double> loss_trace;
    std::optional<metrics::MetricsReport> metrics;
    imaging::Mask mask;
    double seconds = 0.0;
};

/// Builds the observation mask described by `source` for an h x w image.
imaging::Mask build_mask(const MaskSource& source, Index height, Index width, std::uint64_t seed);

/// Load, mask, encode, optimize, compose, decode and write outputs plus the manifest.
InpaintOutcome run_inpaint(const InpaintRequest& request, std::ostream& log);

std::string manifest_json(const InpaintRequest& request, const InpaintOutcome& outcome);
InpaintRequest request_from_manifest(const fs::path& manifest);

/// Entry point shared by the executable and the tests; args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qinpaint::cli
