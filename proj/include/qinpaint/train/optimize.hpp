#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "qinpaint/qnn/network.hpp"
#include "qinpaint/train/adam.hpp"
#include "qinpaint/train/objective.hpp"

namespace qinpaint::train {

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t iterations = 5000;
    std::uint64_t seed = 0;
    double input_amplitude = 0.1;
    std::size_t log_interval = 100;
    bool deterministic = true;
    std::size_t checkpoint_interval = 0;  // 0 disables checkpoints
    std::filesystem::path checkpoint_dir;

    void validate() const;
};

/// Independent streams derived from one user seed.
struct SeedPlan {
    std::uint64_t mask;
    std::uint64_t init;
    std::uint64_t input;
};

SeedPlan split_seed(std::uint64_t seed);

/// Fixed network input: every component plane i.i.d. uniform on [0, amplitude].
QTensor random_input(Index channels, Index height, Index width, double amplitude, std::uint64_t seed);

struct OptimizeResult {
    QTensor x_opt;                 // network output after the final update
    std::vector<double> loss_trace;  // loss before each update
    qnn::ParameterSet params;
};

/// Called after each iteration with (iteration index, loss before the update).
using IterationObserver = std::function<void(std::size_t, double, const qnn::ParameterSet&)>;

/// Fits the untrained network to the observed entries: forward, masked loss,
/// backward and one Adam step per iteration, with the input held fixed.
OptimizeResult optimize(const QTensor& q_observed, const Mask& mask, const qnn::NetworkSpec& spec,
                        const TrainConfig& cfg, const IterationObserver& observer = {});

}  // namespace qinpaint::train
