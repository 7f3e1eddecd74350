#pragma once

#include <Eigen/Core>

#include "qinpaint/qtensor.hpp"

namespace qinpaint::qnn {

/// Quaternion convolution weights: out x in x kh x kw quaternions plus one
/// quaternion bias per output channel, all stored as four real planes.
template <typename Scalar>
struct QKernelT {
    using Planes = Eigen::Matrix<Scalar, Eigen::Dynamic, 4>;

    Index out_channels = 0;
    Index in_channels = 0;
    Index kernel_h = 0;
    Index kernel_w = 0;
    Planes body;  // rows indexed by ((o*in + i)*kh + ky)*kw + kx
    Planes bias;  // rows indexed by output channel

    QKernelT() = default;
    QKernelT(Index out, Index in, Index kh, Index kw)
        : out_channels(out), in_channels(in), kernel_h(kh), kernel_w(kw),
          body(Planes::Zero(out * in * kh * kw, 4)), bias(Planes::Zero(out, 4)) {}

    static QKernelT zeros_like(const QKernelT& k) {
        return QKernelT(k.out_channels, k.in_channels, k.kernel_h, k.kernel_w);
    }

    Index taps() const { return kernel_h * kernel_w; }
    Index index(Index o, Index i, Index ky, Index kx) const {
        return ((o * in_channels + i) * kernel_h + ky) * kernel_w + kx;
    }

    Quaternion<Scalar> at(Index o, Index i, Index ky, Index kx) const {
        const Index r = index(o, i, ky, kx);
        return {body(r, 0), body(r, 1), body(r, 2), body(r, 3)};
    }
    void set(Index o, Index i, Index ky, Index kx, const Quaternion<Scalar>& q) {
        const Index r = index(o, i, ky, kx);
        body(r, 0) = q.w;
        body(r, 1) = q.x;
        body(r, 2) = q.y;
        body(r, 3) = q.z;
    }

    /// Real weights in the kernel body (excluding bias).
    Index body_parameter_count() const { return 4 * out_channels * in_channels * kernel_h * kernel_w; }
    Index parameter_count() const { return body_parameter_count() + 4 * out_channels; }

    friend bool operator==(const QKernelT&, const QKernelT&) = default;
};

using QKernel = QKernelT<double>;

/// Hamilton mixing of a left-multiplied kernel: output component `po` takes
/// `sign(po, pi) * K[component(po, pi)]` applied to input component `pi`.
struct HamiltonMixing {
    static constexpr int component[4][4] = {{0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};
    static constexpr int sign[4][4] = {{1, -1, -1, -1}, {1, 1, -1, 1}, {1, 1, 1, -1}, {1, -1, 1, 1}};
};

/// Body weights of a real convolution mapping 4*in -> 4*out real channels.
inline Index matched_real_body_count(Index out_quaternion, Index in_quaternion, Index kh, Index kw) {
    return (4 * out_quaternion) * (4 * in_quaternion) * kh * kw;
}

}  // namespace qinpaint::qnn
