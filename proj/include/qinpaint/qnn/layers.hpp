#pragma once

#include <string>
#include <string_view>

#include "qinpaint/qnn/qkernel.hpp"
#include "qinpaint/qtensor.hpp"

namespace qinpaint::qnn {

// ---------------------------------------------------------------------------
// Quaternion convolution and transposed convolution
// ---------------------------------------------------------------------------

struct ConvGeometry {
    Index stride = 1;
    Index padding = 0;
    Index output_padding = 0;  // transposed convolution only
};

Index conv_output_extent(Index in, Index kernel, const ConvGeometry& g);
Index deconv_output_extent(Index in, Index kernel, const ConvGeometry& g);

template <typename Scalar>
struct ConvGradients {
    QTensorT<Scalar> input;
    QKernelT<Scalar> kernel;  // body and bias gradients
};

/// Quaternion cross-correlation: every tap is the Hamilton product kernel * input,
/// summed over input channels and taps. Bias is added per output channel.
template <typename Scalar>
QTensorT<Scalar> qconv2d_forward(const QTensorT<Scalar>& input, const QKernelT<Scalar>& kernel,
                                 Index stride, Index padding);

template <typename Scalar>
ConvGradients<Scalar> qconv2d_backward(const QTensorT<Scalar>& input, const QKernelT<Scalar>& kernel,
                                       const QTensorT<Scalar>& grad_out, Index stride, Index padding);

/// Transposed quaternion convolution. Each input entry is scattered through
/// kernel * input (Hamilton product) into a stride-spaced output window.
///
/// In the 4-plane real representation this is the adjoint of qconv2d_forward
/// run with the partner kernel from `adjoint_partner` and no bias.
template <typename Scalar>
QTensorT<Scalar> qdeconv2d_forward(const QTensorT<Scalar>& input, const QKernelT<Scalar>& kernel,
                                   const ConvGeometry& geometry);

template <typename Scalar>
ConvGradients<Scalar> qdeconv2d_backward(const QTensorT<Scalar>& input, const QKernelT<Scalar>& kernel,
                                         const QTensorT<Scalar>& grad_out, const ConvGeometry& geometry);

/// Kernel of the convolution whose adjoint is qdeconv2d with `kernel`:
/// partner(i, o) = conjugate(kernel(o, i)), zero bias.
template <typename Scalar>
QKernelT<Scalar> adjoint_partner(const QKernelT<Scalar>& kernel);

// ---------------------------------------------------------------------------
// Split activations
// ---------------------------------------------------------------------------

enum class ActivationKind { None, ReLU, LeakyReLU, Sigmoid, Tanh };

struct Activation {
    ActivationKind kind = ActivationKind::LeakyReLU;
    double slope = 0.2;  // LeakyReLU negative slope
};

std::string_view to_string(ActivationKind kind);
ActivationKind activation_from_string(std::string_view name);

template <typename Scalar>
QTensorT<Scalar> split_activation_forward(const QTensorT<Scalar>& input, const Activation& f);

/// `pre_activation` is the forward input.
template <typename Scalar>
QTensorT<Scalar> split_activation_backward(const QTensorT<Scalar>& pre_activation,
                                           const QTensorT<Scalar>& grad_out, const Activation& f);

// ---------------------------------------------------------------------------
// Quaternion batch normalization (split form, batch of one)
// ---------------------------------------------------------------------------

template <typename Scalar>
struct BatchNormParams {
    using Planes = Eigen::Matrix<Scalar, Eigen::Dynamic, 4>;
    Planes scale;  // channels x 4
    Planes shift;  // channels x 4

    static BatchNormParams identity(Index channels) {
        return {Planes::Ones(channels, 4), Planes::Zero(channels, 4)};
    }
    static BatchNormParams zeros(Index channels) {
        return {Planes::Zero(channels, 4), Planes::Zero(channels, 4)};
    }
    Index channels() const { return scale.rows(); }
    friend bool operator==(const BatchNormParams&, const BatchNormParams&) = default;
};

template <typename Scalar>
struct BatchNormCache {
    QTensorT<Scalar> normalized;                        // (x - mean) * inv_std
    Eigen::Matrix<Scalar, Eigen::Dynamic, 4> inv_std;  // channels x 4
};

template <typename Scalar>
struct BatchNormResult {
    QTensorT<Scalar> output;
    BatchNormCache<Scalar> cache;
};

template <typename Scalar>
struct BatchNormGradients {
    QTensorT<Scalar> input;
    BatchNormParams<Scalar> params;
};

/// Each channel of each plane is normalized with its own spatial mean and
/// population variance, then scaled and shifted.
template <typename Scalar>
BatchNormResult<Scalar> qbn_forward(const QTensorT<Scalar>& input, const BatchNormParams<Scalar>& params,
                                    Scalar epsilon);

template <typename Scalar>
BatchNormGradients<Scalar> qbn_backward(const BatchNormCache<Scalar>& cache,
                                        const BatchNormParams<Scalar>& params,
                                        const QTensorT<Scalar>& grad_out);

/// Re-applies scale and shift to a cached normalized tensor.
template <typename Scalar>
QTensorT<Scalar> qbn_affine(const QTensorT<Scalar>& normalized, const BatchNormParams<Scalar>& params);

}  // namespace qinpaint::qnn
