#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qinpaint/qnn/layers.hpp"

namespace qinpaint::qnn {

enum class LayerKind { QConv, QDeconv };

/// One convolutional layer of a stage.
struct LayerSpec {
    LayerKind kind = LayerKind::QConv;
    Index kernel = 3;
    Index stride = 1;
    Index padding = 1;
    Index output_padding = 0;
    Index out_channels = 64;

    ConvGeometry geometry() const { return {stride, padding, output_padding}; }
    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// A convolution followed by optional QBN and a split activation.
struct StageSpec {
    LayerSpec layer;
    bool batch_norm = true;
    Activation activation{};

    friend bool operator==(const StageSpec& a, const StageSpec& b) {
        // the slope only means something for the leaky variant
        const bool leaky = a.activation.kind == ActivationKind::LeakyReLU;
        return a.layer == b.layer && a.batch_norm == b.batch_norm && a.activation.kind == b.activation.kind &&
               (!leaky || a.activation.slope == b.activation.slope);
    }
};

struct NetworkSpec {
    Index input_channels = 1;
    double bn_epsilon = 1e-5;
    std::vector<StageSpec> stages;

    /// Product of all stage strides; input extents must be divisible by it.
    Index downsampling_factor() const;
    Index output_channels() const;
    void validate() const;

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// The 11-stage quaternion encoder-decoder: four stride-2 encoders between two
/// stride-1 convolutions, four stride-2 decoders, and a bare 1-channel head.
NetworkSpec default_spec(Index width = 64, double leaky_slope = 0.2);

std::string spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const std::string& text);
void save_spec(const NetworkSpec& spec, const std::filesystem::path& path);
NetworkSpec load_spec(const std::filesystem::path& path);

struct StageParams {
    QKernel kernel;
    std::optional<BatchNormParams<double>> bn;

    friend bool operator==(const StageParams&, const StageParams&) = default;
};

/// Description of one contiguous block in the flattened parameter vector.
struct ParameterBlock {
    std::size_t stage;
    std::string name;  // "kernel", "bias", "bn_scale", "bn_shift"
    std::vector<Index> shape;
    Index offset;
    Index count;
};

/// All trainable quaternion weights of a network with matching gradient buffers.
class ParameterSet {
public:
    ParameterSet() = default;
    explicit ParameterSet(const NetworkSpec& spec);

    std::vector<StageParams>& values() { return values_; }
    const std::vector<StageParams>& values() const { return values_; }
    std::vector<StageParams>& grads() { return grads_; }
    const std::vector<StageParams>& grads() const { return grads_; }

    void zero_grad();
    Index size() const;
    Index body_weight_count() const;

    std::vector<ParameterBlock> layout() const;
    Eigen::VectorXd flatten() const { return flatten(values_); }
    Eigen::VectorXd flatten_grads() const { return flatten(grads_); }
    void assign(const Eigen::Ref<const Eigen::VectorXd>& flat) { unflatten(flat, values_); }
    void assign_grads(const Eigen::Ref<const Eigen::VectorXd>& flat) { unflatten(flat, grads_); }

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

private:
    static Eigen::VectorXd flatten(const std::vector<StageParams>& v);
    void unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat, std::vector<StageParams>& v) const;

    std::vector<StageParams> values_;
    std::vector<StageParams> grads_;
};

/// Kernel weights i.i.d. N(0, 2 / (4 * in * kh * kw)); biases 0; QBN scale 1, shift 0.
ParameterSet init_parameters(const NetworkSpec& spec, std::uint64_t seed);

/// Standard deviation used by init_parameters for a layer.
double init_stddev(Index in_channels, Index kernel_h, Index kernel_w);

/// Activations recorded during network_forward for the backward pass.
struct Tape {
    struct Entry {
        QTensor input;                                   // stage input
        std::optional<BatchNormCache<double>> bn;        // when the stage normalizes
        QTensor pre_activation;                          // empty when recomputable from bn
    };
    std::vector<Entry> stages;

    void clear() { stages.clear(); }
};

/// Runs all stages in order. Records activations on `tape` when non-null.
QTensor network_forward(const NetworkSpec& spec, const ParameterSet& params, const QTensor& z, Tape* tape = nullptr);

/// Accumulates parameter gradients into `params.grads()` and returns dLoss/dz.
QTensor network_backward(const NetworkSpec& spec, ParameterSet& params, const Tape& tape, const QTensor& grad_out);

/// Spatial size of each stage output for an input of the given extent.
std::vector<Shape3> trace_shapes(const NetworkSpec& spec, Index height, Index width);

}  // namespace qinpaint::qnn
