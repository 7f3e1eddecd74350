#include <Eigen/Core>

#include <string>

#include "qinpaint/qnn/layers.hpp"

namespace qinpaint::qnn {

namespace {

template <typename S>
using ColMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// A real tensor: `channels` contiguous height x width row-major images.
struct Frame {
    Index channels;
    Index height;
    Index width;
};

// Sliding-window geometry producing out_h x out_w positions over a Frame.
struct Window {
    Index out_h;
    Index out_w;
    Index kernel_h;
    Index kernel_w;
    Index stride;
    Index padding;
};

// cols(pos, (c*kh + ky)*kw + kx) = image[c][pos_y*stride - pad + ky][pos_x*stride - pad + kx], zero outside.
template <typename S>
void im2col(const S* image, const Frame& f, const Window& w, ColMatrix<S>& cols) {
    const Index taps = w.kernel_h * w.kernel_w;
    cols.resize(w.out_h * w.out_w, f.channels * taps);
    const Index ncols = cols.cols();
#ifdef QINPAINT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Index col = 0; col < ncols; ++col) {
        const Index c = col / taps;
        const Index ky = (col % taps) / w.kernel_w;
        const Index kx = col % w.kernel_w;
        const S* src = image + c * f.height * f.width;
        S* dst = cols.col(col).data();
        for (Index oy = 0; oy < w.out_h; ++oy) {
            const Index iy = oy * w.stride - w.padding + ky;
            S* row = dst + oy * w.out_w;
            if (iy < 0 || iy >= f.height) {
                for (Index ox = 0; ox < w.out_w; ++ox) row[ox] = S(0);
                continue;
            }
            const S* src_row = src + iy * f.width;
            for (Index ox = 0; ox < w.out_w; ++ox) {
                const Index ix = ox * w.stride - w.padding + kx;
                row[ox] = (ix >= 0 && ix < f.width) ? src_row[ix] : S(0);
            }
        }
    }
}

// Adjoint of im2col: accumulates cols back into `image` (caller zero-fills).
// Each channel is owned by one worker and visited in a fixed order.
template <typename S>
void col2im(const ColMatrix<S>& cols, const Frame& f, const Window& w, S* image) {
    const Index taps = w.kernel_h * w.kernel_w;
#ifdef QINPAINT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Index c = 0; c < f.channels; ++c) {
        S* dst = image + c * f.height * f.width;
        for (Index t = 0; t < taps; ++t) {
            const Index ky = t / w.kernel_w;
            const Index kx = t % w.kernel_w;
            const S* src = cols.col(c * taps + t).data();
            for (Index oy = 0; oy < w.out_h; ++oy) {
                const Index iy = oy * w.stride - w.padding + ky;
                if (iy < 0 || iy >= f.height) continue;
                S* dst_row = dst + iy * f.width;
                const S* src_row = src + oy * w.out_w;
                for (Index ox = 0; ox < w.out_w; ++ox) {
                    const Index ix = ox * w.stride - w.padding + kx;
                    if (ix >= 0 && ix < f.width) dst_row[ix] += src_row[ox];
                }
            }
        }
    }
}

// Output-side convolution: out[c] += sum over taps t of z[c*taps + t] read at the
// tap's input offset. `z` holds one input-grid image per (channel, tap) column.
template <typename S>
void shift_sum(const ColMatrix<S>& z, const Frame& in, const Window& w, Index channels, S* out) {
    const Index taps = w.kernel_h * w.kernel_w;
#ifdef QINPAINT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Index c = 0; c < channels; ++c) {
        S* dst = out + c * w.out_h * w.out_w;
        for (Index t = 0; t < taps; ++t) {
            const Index ky = t / w.kernel_w;
            const Index kx = t % w.kernel_w;
            const S* src = z.col(c * taps + t).data();
            for (Index oy = 0; oy < w.out_h; ++oy) {
                const Index iy = oy * w.stride - w.padding + ky;
                if (iy < 0 || iy >= in.height) continue;
                const S* src_row = src + iy * in.width;
                S* dst_row = dst + oy * w.out_w;
                for (Index ox = 0; ox < w.out_w; ++ox) {
                    const Index ix = ox * w.stride - w.padding + kx;
                    if (ix >= 0 && ix < in.width) dst_row[ox] += src_row[ix];
                }
            }
        }
    }
}

// Adjoint of shift_sum: spreads each output gradient back to its tap offsets.
template <typename S>
void shift_spread(const S* grad, const Frame& in, const Window& w, Index channels, ColMatrix<S>& z) {
    const Index taps = w.kernel_h * w.kernel_w;
    z.setZero(in.height * in.width, channels * taps);
#ifdef QINPAINT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Index col = 0; col < channels * taps; ++col) {
        const Index c = col / taps;
        const Index ky = (col % taps) / w.kernel_w;
        const Index kx = col % w.kernel_w;
        const S* src = grad + c * w.out_h * w.out_w;
        S* dst = z.col(col).data();
        for (Index oy = 0; oy < w.out_h; ++oy) {
            const Index iy = oy * w.stride - w.padding + ky;
            if (iy < 0 || iy >= in.height) continue;
            for (Index ox = 0; ox < w.out_w; ++ox) {
                const Index ix = ox * w.stride - w.padding + kx;
                if (ix >= 0 && ix < in.width) dst[iy * in.width + ix] = src[oy * w.out_w + ox];
            }
        }
    }
}

// Visits every (output component, input component, out channel, in channel, tap)
// of the Hamilton block matrix built from a quaternion kernel.
template <typename S, typename F>
void for_each_mixing_entry(const QKernelT<S>& k, F&& f) {
    const Index taps = k.taps();
    for (int po = 0; po < 4; ++po)
        for (int pi = 0; pi < 4; ++pi) {
            const int comp = HamiltonMixing::component[po][pi];
            const S sign = S(HamiltonMixing::sign[po][pi]);
            for (Index co = 0; co < k.out_channels; ++co)
                for (Index ci = 0; ci < k.in_channels; ++ci)
                    for (Index t = 0; t < taps; ++t) {
                        const Index body_row = (co * k.in_channels + ci) * taps + t;
                        f(po, pi, co, ci, t, body_row, comp, sign);
                    }
        }
}

// Convolution weights as a (4*in*taps) x (4*out) real matrix.
struct ConvLayout {
    Index in, out, taps;
    Index row(int po, int pi, Index co, Index ci, Index t) const {
        (void)po; (void)co;
        return (pi * in + ci) * taps + t;
    }
    Index col(int po, int pi, Index co, Index ci, Index t) const {
        (void)pi; (void)ci; (void)t;
        return po * out + co;
    }
    Index rows() const { return 4 * in * taps; }
    Index cols() const { return 4 * out; }
};

// Transposed-convolution weights as a (4*in) x (4*out*taps) real matrix.
struct DeconvLayout {
    Index in, out, taps;
    Index row(int po, int pi, Index co, Index ci, Index t) const {
        (void)po; (void)co; (void)t;
        return pi * in + ci;
    }
    Index col(int po, int pi, Index co, Index ci, Index t) const {
        (void)pi; (void)ci;
        return (po * out + co) * taps + t;
    }
    Index rows() const { return 4 * in; }
    Index cols() const { return 4 * out * taps; }
};

template <typename S, typename Layout>
ColMatrix<S> build_weight_matrix(const QKernelT<S>& k, const Layout& layout) {
    ColMatrix<S> m = ColMatrix<S>::Zero(layout.rows(), layout.cols());
    for_each_mixing_entry(k, [&](int po, int pi, Index co, Index ci, Index t, Index body_row, int comp, S sign) {
        m(layout.row(po, pi, co, ci, t), layout.col(po, pi, co, ci, t)) = sign * k.body(body_row, comp);
    });
    return m;
}

// Chain rule through the block matrix: every quaternion weight component appears
// in four entries, so its gradient is the signed sum of those four.
template <typename S, typename Layout>
void fold_weight_gradient(const ColMatrix<S>& dm, const Layout& layout, QKernelT<S>& grad) {
    for_each_mixing_entry(grad, [&](int po, int pi, Index co, Index ci, Index t, Index body_row, int comp, S sign) {
        grad.body(body_row, comp) += sign * dm(layout.row(po, pi, co, ci, t), layout.col(po, pi, co, ci, t));
    });
}

template <typename S>
void add_bias(QTensorT<S>& out, const typename QKernelT<S>::Planes& bias) {
    const Index n = out.spatial();
    for (int p = 0; p < 4; ++p)
        for (Index c = 0; c < out.channels(); ++c) out.plane(p).segment(c * n, n).array() += bias(c, p);
}

template <typename S>
typename QKernelT<S>::Planes bias_gradient(const QTensorT<S>& grad_out) {
    const Index n = grad_out.spatial();
    typename QKernelT<S>::Planes g(grad_out.channels(), 4);
    for (int p = 0; p < 4; ++p)
        for (Index c = 0; c < grad_out.channels(); ++c) g(c, p) = grad_out.plane(p).segment(c * n, n).sum();
    return g;
}

template <typename S>
Eigen::Map<const ColMatrix<S>> as_matrix(const QTensorT<S>& t) {
    return {t.data(), t.spatial(), 4 * t.channels()};
}
template <typename S>
Eigen::Map<ColMatrix<S>> as_matrix(QTensorT<S>& t) {
    return {t.data(), t.spatial(), 4 * t.channels()};
}

// The im2col buffer is out_spatial x 4*in*taps; multiplying first needs
// in_spatial x 4*out*taps instead. Channel-reducing layers (the 1-channel head)
// are far cheaper the second way.
inline bool multiply_first(Index in_spatial, Index out_spatial, Index in_channels, Index out_channels) {
    return in_spatial * out_channels < out_spatial * in_channels;
}

void require_geometry(Index stride, Index padding) {
    if (stride < 1) throw GeometryError("stride must be >= 1, got " + std::to_string(stride));
    if (padding < 0) throw GeometryError("padding must be >= 0, got " + std::to_string(padding));
}

template <typename S>
void require_input_channels(const QTensorT<S>& input, const QKernelT<S>& kernel, const char* op) {
    if (input.channels() != kernel.in_channels) {
        throw ShapeError(std::string(op) + ": input has " + std::to_string(input.channels()) +
                         " quaternion channels, kernel expects " + std::to_string(kernel.in_channels));
    }
}

template <typename S>
void require_grad_shape(const QTensorT<S>& grad_out, const Shape3& expected, const char* op) {
    if (!(grad_out.shape() == expected)) {
        throw ShapeError(std::string(op) + ": grad_out shape " + to_string(grad_out.shape()) +
                         " does not match forward output " + to_string(expected));
    }
}

struct ConvPlan {
    Index out_h;
    Index out_w;
};

template <typename S>
ConvPlan plan_conv(const QTensorT<S>& input, const QKernelT<S>& kernel, Index stride, Index padding) {
    require_geometry(stride, padding);
    const ConvGeometry g{stride, padding, 0};
    const Index oh = conv_output_extent(input.height(), kernel.kernel_h, g);
    const Index ow = conv_output_extent(input.width(), kernel.kernel_w, g);
    if (oh <= 0 || ow <= 0) {
        throw GeometryError("qconv2d: non-positive output extent " + std::to_string(oh) + "x" + std::to_string(ow) +
                            " for input " + to_string(input.shape()));
    }
    return {oh, ow};
}

template <typename S>
ConvPlan plan_deconv(const QTensorT<S>& input, const QKernelT<S>& kernel, const ConvGeometry& g) {
    require_geometry(g.stride, g.padding);
    if (g.output_padding < 0 || g.output_padding >= g.stride) {
        throw GeometryError("qdeconv2d: output_padding must lie in [0, stride), got " +
                            std::to_string(g.output_padding));
    }
    const Index oh = deconv_output_extent(input.height(), kernel.kernel_h, g);
    const Index ow = deconv_output_extent(input.width(), kernel.kernel_w, g);
    if (oh <= 0 || ow <= 0 || input.height() <= 0 || input.width() <= 0) {
        throw GeometryError("qdeconv2d: non-positive output extent " + std::to_string(oh) + "x" +
                            std::to_string(ow) + " for input " + to_string(input.shape()));
    }
    return {oh, ow};
}

}  // namespace

Index conv_output_extent(Index in, Index kernel, const ConvGeometry& g) {
    const Index span = in + 2 * g.padding - kernel;
    if (span < 0) return 0;
    return span / g.stride + 1;
}

Index deconv_output_extent(Index in, Index kernel, const ConvGeometry& g) {
    return (in - 1) * g.stride - 2 * g.padding + kernel + g.output_padding;
}

template <typename S>
QTensorT<S> qconv2d_forward(const QTensorT<S>& input, const QKernelT<S>& kernel, Index stride, Index padding) {
    require_input_channels(input, kernel, "qconv2d");
    const ConvPlan plan = plan_conv(input, kernel, stride, padding);

    const Frame frame{4 * input.channels(), input.height(), input.width()};
    const Window window{plan.out_h, plan.out_w, kernel.kernel_h, kernel.kernel_w, stride, padding};
    QTensorT<S> out(kernel.out_channels, plan.out_h, plan.out_w);

    if (multiply_first(input.spatial(), out.spatial(), kernel.in_channels, kernel.out_channels)) {
        const DeconvLayout layout{kernel.in_channels, kernel.out_channels, kernel.taps()};
        const ColMatrix<S> z = as_matrix(input) * build_weight_matrix(kernel, layout);
        shift_sum(z, frame, window, 4 * kernel.out_channels, out.data());
    } else {
        ColMatrix<S> cols;
        im2col(input.data(), frame, window, cols);
        const ConvLayout layout{kernel.in_channels, kernel.out_channels, kernel.taps()};
        as_matrix(out).noalias() = cols * build_weight_matrix(kernel, layout);
    }
    add_bias(out, kernel.bias);
    return out;
}

template <typename S>
ConvGradients<S> qconv2d_backward(const QTensorT<S>& input, const QKernelT<S>& kernel, const QTensorT<S>& grad_out,
                                  Index stride, Index padding) {
    require_input_channels(input, kernel, "qconv2d_backward");
    const ConvPlan plan = plan_conv(input, kernel, stride, padding);
    require_grad_shape(grad_out, {kernel.out_channels, plan.out_h, plan.out_w}, "qconv2d_backward");

    const Frame frame{4 * input.channels(), input.height(), input.width()};
    const Window window{plan.out_h, plan.out_w, kernel.kernel_h, kernel.kernel_w, stride, padding};
    ConvGradients<S> g{QTensorT<S>(input.shape()), QKernelT<S>::zeros_like(kernel)};
    g.kernel.bias = bias_gradient(grad_out);

    if (multiply_first(input.spatial(), grad_out.spatial(), kernel.in_channels, kernel.out_channels)) {
        const DeconvLayout layout{kernel.in_channels, kernel.out_channels, kernel.taps()};
        ColMatrix<S> dz;
        shift_spread(grad_out.data(), frame, window, 4 * kernel.out_channels, dz);
        as_matrix(g.input).noalias() = dz * build_weight_matrix(kernel, layout).transpose();
        const ColMatrix<S> dweights = as_matrix(input).transpose() * dz;
        fold_weight_gradient(dweights, layout, g.kernel);
        return g;
    }

    ColMatrix<S> cols;
    im2col(input.data(), frame, window, cols);
    const ConvLayout layout{kernel.in_channels, kernel.out_channels, kernel.taps()};
    const auto dout = as_matrix(grad_out);
    const ColMatrix<S> dweights = cols.transpose() * dout;
    fold_weight_gradient(dweights, layout, g.kernel);

    cols.noalias() = dout * build_weight_matrix(kernel, layout).transpose();
    col2im(cols, frame, window, g.input.data());
    return g;
}

template <typename S>
QTensorT<S> qdeconv2d_forward(const QTensorT<S>& input, const QKernelT<S>& kernel, const ConvGeometry& geometry) {
    require_input_channels(input, kernel, "qdeconv2d");
    const ConvPlan plan = plan_deconv(input, kernel, geometry);

    const DeconvLayout layout{kernel.in_channels, kernel.out_channels, kernel.taps()};
    const ColMatrix<S> weights = build_weight_matrix(kernel, layout);
    const ColMatrix<S> cols = as_matrix(input) * weights;

    QTensorT<S> out(kernel.out_channels, plan.out_h, plan.out_w);
    const Frame frame{4 * kernel.out_channels, plan.out_h, plan.out_w};
    const Window window{input.height(), input.width(), kernel.kernel_h, kernel.kernel_w, geometry.stride,
                        geometry.padding};
    col2im(cols, frame, window, out.data());
    add_bias(out, kernel.bias);
    return out;
}

template <typename S>
ConvGradients<S> qdeconv2d_backward(const QTensorT<S>& input, const QKernelT<S>& kernel, const QTensorT<S>& grad_out,
                                    const ConvGeometry& geometry) {
    require_input_channels(input, kernel, "qdeconv2d_backward");
    const ConvPlan plan = plan_deconv(input, kernel, geometry);
    require_grad_shape(grad_out, {kernel.out_channels, plan.out_h, plan.out_w}, "qdeconv2d_backward");

    const DeconvLayout layout{kernel.in_channels, kernel.out_channels, kernel.taps()};
    const ColMatrix<S> weights = build_weight_matrix(kernel, layout);

    const Frame frame{4 * kernel.out_channels, plan.out_h, plan.out_w};
    const Window window{input.height(), input.width(), kernel.kernel_h, kernel.kernel_w, geometry.stride,
                        geometry.padding};
    ColMatrix<S> dcols;
    im2col(grad_out.data(), frame, window, dcols);

    ConvGradients<S> g{QTensorT<S>(input.shape()), QKernelT<S>::zeros_like(kernel)};
    as_matrix(g.input).noalias() = dcols * weights.transpose();
    const ColMatrix<S> dweights = as_matrix(input).transpose() * dcols;
    fold_weight_gradient(dweights, layout, g.kernel);
    g.kernel.bias = bias_gradient(grad_out);
    return g;
}

template <typename S>
QKernelT<S> adjoint_partner(const QKernelT<S>& kernel) {
    QKernelT<S> partner(kernel.in_channels, kernel.out_channels, kernel.kernel_h, kernel.kernel_w);
    for (Index o = 0; o < kernel.out_channels; ++o)
        for (Index i = 0; i < kernel.in_channels; ++i)
            for (Index ky = 0; ky < kernel.kernel_h; ++ky)
                for (Index kx = 0; kx < kernel.kernel_w; ++kx) partner.set(i, o, ky, kx, conjugate(kernel.at(o, i, ky, kx)));
    return partner;
}

template QTensorT<double> qconv2d_forward(const QTensorT<double>&, const QKernelT<double>&, Index, Index);
template ConvGradients<double> qconv2d_backward(const QTensorT<double>&, const QKernelT<double>&,
                                                const QTensorT<double>&, Index, Index);
template QTensorT<double> qdeconv2d_forward(const QTensorT<double>&, const QKernelT<double>&, const ConvGeometry&);
template ConvGradients<double> qdeconv2d_backward(const QTensorT<double>&, const QKernelT<double>&,
                                                  const QTensorT<double>&, const ConvGeometry&);
template QKernelT<double> adjoint_partner(const QKernelT<double>&);

}  // namespace qinpaint::qnn
