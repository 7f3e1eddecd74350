#pragma once

// Shared helpers for the unit and acceptance tests: random fixtures, direct
// loop oracles and central finite differences.

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "qinpaint/qnn/layers.hpp"
#include "qinpaint/qtensor.hpp"

#ifndef QINPAINT_TEST_DATA
#define QINPAINT_TEST_DATA "tests/data"
#endif

namespace testing {

using qinpaint::Index;
using qinpaint::QTensor;
using qinpaint::qnn::QKernel;

inline std::string data_path(const std::string& name) { return std::string(QINPAINT_TEST_DATA) + "/" + name; }

inline QTensor random_tensor(Index c, Index h, Index w, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    QTensor t(c, h, w);
    for (Index i = 0; i < t.planes().size(); ++i) t.planes().data()[i] = u(rng);
    return t;
}

inline QKernel random_kernel(Index out, Index in, Index kh, Index kw, std::mt19937_64& rng, bool with_bias = true) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    QKernel k(out, in, kh, kw);
    for (Index i = 0; i < k.body.size(); ++i) k.body.data()[i] = u(rng);
    if (with_bias)
        for (Index i = 0; i < k.bias.size(); ++i) k.bias.data()[i] = u(rng);
    return k;
}

// Hamilton product written out component by component, kept separate from the
// library so the oracles do not share code with what they check.
inline std::array<double, 4> hamilton_expanded(const std::array<double, 4>& p, const std::array<double, 4>& q) {
    return {p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
            p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
            p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
            p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0]};
}

inline std::array<double, 4> entry(const QTensor& t, Index c, Index y, Index x) {
    const Index o = t.offset(c, y, x);
    return {t.planes()(o, 0), t.planes()(o, 1), t.planes()(o, 2), t.planes()(o, 3)};
}

inline std::array<double, 4> tap(const QKernel& k, Index o, Index i, Index ky, Index kx) {
    const Index r = k.index(o, i, ky, kx);
    return {k.body(r, 0), k.body(r, 1), k.body(r, 2), k.body(r, 3)};
}

// Direct six-deep loop over the quaternion cross-correlation sum.
inline QTensor naive_qconv(const QTensor& in, const QKernel& k, Index stride, Index pad) {
    const Index oh = (in.height() + 2 * pad - k.kernel_h) / stride + 1;
    const Index ow = (in.width() + 2 * pad - k.kernel_w) / stride + 1;
    QTensor out(k.out_channels, oh, ow);
    for (Index o = 0; o < k.out_channels; ++o)
        for (Index y = 0; y < oh; ++y)
            for (Index x = 0; x < ow; ++x) {
                std::array<double, 4> acc{k.bias(o, 0), k.bias(o, 1), k.bias(o, 2), k.bias(o, 3)};
                for (Index i = 0; i < k.in_channels; ++i)
                    for (Index ky = 0; ky < k.kernel_h; ++ky)
                        for (Index kx = 0; kx < k.kernel_w; ++kx) {
                            const Index sy = y * stride + ky - pad, sx = x * stride + kx - pad;
                            if (sy < 0 || sx < 0 || sy >= in.height() || sx >= in.width()) continue;
                            const auto prod = hamilton_expanded(tap(k, o, i, ky, kx), entry(in, i, sy, sx));
                            for (int p = 0; p < 4; ++p) acc[p] += prod[p];
                        }
                const Index off = out.offset(o, y, x);
                for (int p = 0; p < 4; ++p) out.planes()(off, p) = acc[p];
            }
    return out;
}

// Scatter form of the transposed convolution.
inline QTensor naive_qdeconv(const QTensor& in, const QKernel& k, Index stride, Index pad, Index out_pad) {
    const Index oh = (in.height() - 1) * stride - 2 * pad + k.kernel_h + out_pad;
    const Index ow = (in.width() - 1) * stride - 2 * pad + k.kernel_w + out_pad;
    QTensor out(k.out_channels, oh, ow);
    for (Index o = 0; o < k.out_channels; ++o)
        for (Index y = 0; y < oh; ++y)
            for (Index x = 0; x < ow; ++x)
                for (int p = 0; p < 4; ++p) out.planes()(out.offset(o, y, x), p) = k.bias(o, p);
    for (Index i = 0; i < k.in_channels; ++i)
        for (Index y = 0; y < in.height(); ++y)
            for (Index x = 0; x < in.width(); ++x)
                for (Index o = 0; o < k.out_channels; ++o)
                    for (Index ky = 0; ky < k.kernel_h; ++ky)
                        for (Index kx = 0; kx < k.kernel_w; ++kx) {
                            const Index ty = y * stride + ky - pad, tx = x * stride + kx - pad;
                            if (ty < 0 || tx < 0 || ty >= oh || tx >= ow) continue;
                            const auto prod = hamilton_expanded(tap(k, o, i, ky, kx), entry(in, i, y, x));
                            const Index off = out.offset(o, ty, tx);
                            for (int p = 0; p < 4; ++p) out.planes()(off, p) += prod[p];
                        }
    return out;
}

// Plain real-valued cross-correlation, single input/output plane per channel.
inline Eigen::MatrixXd naive_real_conv(const std::vector<Eigen::MatrixXd>& in,
                                       const std::vector<std::vector<Eigen::MatrixXd>>& w, double bias, Index o,
                                       Index stride, Index pad) {
    const Index k = w[o][0].rows();
    const Index oh = (in[0].rows() + 2 * pad - k) / stride + 1;
    const Index ow = (in[0].cols() + 2 * pad - k) / stride + 1;
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(oh, ow, bias);
    for (std::size_t i = 0; i < in.size(); ++i)
        for (Index y = 0; y < oh; ++y)
            for (Index x = 0; x < ow; ++x)
                for (Index ky = 0; ky < k; ++ky)
                    for (Index kx = 0; kx < k; ++kx) {
                        const Index sy = y * stride + ky - pad, sx = x * stride + kx - pad;
                        if (sy < 0 || sx < 0 || sy >= in[i].rows() || sx >= in[i].cols()) continue;
                        out(y, x) += w[o][i](ky, kx) * in[i](sy, sx);
                    }
    return out;
}

// Central difference of a scalar function over every entry of `x`, written
// back into a buffer of the same size.
inline Eigen::VectorXd central_difference(Eigen::VectorXd x, const std::function<double(const Eigen::VectorXd&)>& f,
                                          double h = 1e-6) {
    Eigen::VectorXd g(x.size());
    for (Index i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double fp = f(x);
        x[i] = keep - h;
        const double fm = f(x);
        x[i] = keep;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline Eigen::VectorXd flat(const QTensor& t) {
    return Eigen::Map<const Eigen::VectorXd>(t.data(), t.planes().size());
}

inline QTensor unflat(const Eigen::VectorXd& v, const qinpaint::Shape3& s) {
    QTensor t(s);
    Eigen::Map<Eigen::VectorXd>(t.data(), v.size()) = v;
    return t;
}

// max |a - b| / max(|b|_inf, floor): relative error against the larger of the
// reference scale and a floor, so near-zero gradients don't blow the ratio up.
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-3) {
    const double scale = std::max(b.cwiseAbs().maxCoeff(), floor);
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace testing
