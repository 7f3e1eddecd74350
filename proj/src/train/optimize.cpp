#include "qinpaint/train/optimize.hpp"

#include <cmath>
#include <random>

#include "qinpaint/parallel.hpp"
#include "qinpaint/train/checkpoint.hpp"

namespace qinpaint::train {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (!(input_amplitude >= 0.0)) throw std::invalid_argument("input_amplitude must be >= 0");
    if (checkpoint_interval > 0 && checkpoint_dir.empty())
        throw std::invalid_argument("checkpoint_interval set without checkpoint_dir");
}

SeedPlan split_seed(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    std::uint32_t words[6];
    seq.generate(std::begin(words), std::end(words));
    auto join = [&](int i) { return (std::uint64_t(words[2 * i]) << 32) | words[2 * i + 1]; };
    return {join(0), join(1), join(2)};
}

QTensor random_input(Index channels, Index height, Index width, double amplitude, std::uint64_t seed) {
    QTensor z(channels, height, width);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, amplitude);
    for (Index i = 0; i < 4 * z.numel(); ++i) z.data()[i] = amplitude > 0.0 ? uniform(rng) : 0.0;
    return z;
}

namespace {

// Pins the worker count for the lifetime of the guard.
class ThreadPin {
public:
    explicit ThreadPin(bool active) : previous_(num_threads()), active_(active) {
        if (active_) set_num_threads(1);
    }
    ~ThreadPin() {
        if (active_) set_num_threads(previous_);
    }
    ThreadPin(const ThreadPin&) = delete;
    ThreadPin& operator=(const ThreadPin&) = delete;

private:
    int previous_;
    bool active_;
};

}  // namespace

OptimizeResult optimize(const QTensor& q_observed, const Mask& mask, const qnn::NetworkSpec& spec,
                        const TrainConfig& cfg, const IterationObserver& observer) {
    cfg.validate();
    spec.validate();
    if (q_observed.channels() != spec.output_channels())
        throw ShapeError("optimize: observation has " + std::to_string(q_observed.channels()) +
                         " quaternion channels, network emits " + std::to_string(spec.output_channels()));
    if (!is_pure(q_observed, kPurityTolerance))
        throw std::invalid_argument("optimize: observation must be a pure quaternion tensor");
    if (mask.height() != q_observed.height() || mask.width() != q_observed.width())
        throw ShapeError("optimize: mask and observation differ in spatial size");

    const ThreadPin pin(cfg.deterministic);
    const SeedPlan seeds = split_seed(cfg.seed);

    OptimizeResult result;
    result.params = qnn::init_parameters(spec, seeds.init);
    const QTensor z =
        random_input(spec.input_channels, q_observed.height(), q_observed.width(), cfg.input_amplitude, seeds.input);

    AdamState adam = AdamState::for_size(result.params.size());
    qnn::Tape tape;
    result.loss_trace.reserve(cfg.iterations);

    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        const QTensor pred = qnn::network_forward(spec, result.params, z, &tape);
        const double loss = masked_loss(pred, q_observed, mask);
        if (!std::isfinite(loss)) throw DivergenceError(it, loss);
        result.loss_trace.push_back(loss);

        result.params.zero_grad();
        qnn::network_backward(spec, result.params, tape, loss_backward(pred, q_observed, mask));
        adam_step(result.params, adam, cfg.learning_rate);

        if (cfg.checkpoint_interval > 0 && (it + 1) % cfg.checkpoint_interval == 0)
            save_checkpoint(result.params, cfg.checkpoint_dir, it + 1);
        if (observer) observer(it, loss, result.params);
    }
    tape.clear();
    result.x_opt = qnn::network_forward(spec, result.params, z, nullptr);
    if (!all_finite(result.x_opt)) throw DivergenceError(cfg.iterations, std::nan(""));
    return result;
}

}  // namespace qinpaint::train
