#include <cmath>
#include <string>

#include "qinpaint/qnn/layers.hpp"

namespace qinpaint::qnn {

namespace {

template <typename S>
void require_params(const QTensorT<S>& t, const BatchNormParams<S>& params, const char* op) {
    if (params.scale.rows() != t.channels() || params.shift.rows() != t.channels()) {
        throw ShapeError(std::string(op) + ": parameters for " + std::to_string(params.scale.rows()) +
                         " channels, tensor " + to_string(t.shape()));
    }
}

}  // namespace

// A single spatial position is accepted: the centred value is zero and epsilon
// keeps the scale finite, so the stage emits its shift.
template <typename S>
BatchNormResult<S> qbn_forward(const QTensorT<S>& input, const BatchNormParams<S>& params, S epsilon) {
    require_params(input, params, "qbn_forward");
    const Index n = input.spatial();
    if (n < 1) throw GeometryError("qbn_forward: degenerate spatial extent " + to_string(input.shape()));
    if (!(epsilon > S(0))) throw std::invalid_argument("qbn_forward: epsilon must be positive");

    BatchNormResult<S> r{QTensorT<S>(input.shape()), {QTensorT<S>(input.shape()), {}}};
    r.cache.inv_std.resize(input.channels(), 4);
    for (int p = 0; p < 4; ++p)
        for (Index c = 0; c < input.channels(); ++c) {
            const auto x = input.plane(p).segment(c * n, n).array();
            const S mean = x.sum() / S(n);
            const S var = (x - mean).square().sum() / S(n);
            const S inv = S(1) / std::sqrt(var + epsilon);
            r.cache.inv_std(c, p) = inv;
            auto xhat = r.cache.normalized.plane(p).segment(c * n, n).array();
            xhat = (x - mean) * inv;
            r.output.plane(p).segment(c * n, n).array() = params.scale(c, p) * xhat + params.shift(c, p);
        }
    return r;
}

template <typename S>
QTensorT<S> qbn_affine(const QTensorT<S>& normalized, const BatchNormParams<S>& params) {
    require_params(normalized, params, "qbn_affine");
    const Index n = normalized.spatial();
    QTensorT<S> out(normalized.shape());
    for (int p = 0; p < 4; ++p)
        for (Index c = 0; c < normalized.channels(); ++c)
            out.plane(p).segment(c * n, n).array() =
                params.scale(c, p) * normalized.plane(p).segment(c * n, n).array() + params.shift(c, p);
    return out;
}

template <typename S>
BatchNormGradients<S> qbn_backward(const BatchNormCache<S>& cache, const BatchNormParams<S>& params,
                                   const QTensorT<S>& grad_out) {
    QTensorT<S>::require_same_shape(cache.normalized, grad_out, "qbn_backward");
    require_params(grad_out, params, "qbn_backward");
    const Index n = grad_out.spatial();
    const S inv_n = S(1) / S(n);

    BatchNormGradients<S> g{QTensorT<S>(grad_out.shape()), BatchNormParams<S>::zeros(grad_out.channels())};
    for (int p = 0; p < 4; ++p)
        for (Index c = 0; c < grad_out.channels(); ++c) {
            const auto dy = grad_out.plane(p).segment(c * n, n).array();
            const auto xhat = cache.normalized.plane(p).segment(c * n, n).array();
            g.params.scale(c, p) = (dy * xhat).sum();
            g.params.shift(c, p) = dy.sum();

            const S gamma = params.scale(c, p);
            const S sum_dxhat = gamma * g.params.shift(c, p);
            const S sum_dxhat_xhat = gamma * g.params.scale(c, p);
            g.input.plane(p).segment(c * n, n).array() =
                cache.inv_std(c, p) * (gamma * dy - inv_n * sum_dxhat - xhat * (inv_n * sum_dxhat_xhat));
        }
    return g;
}

template BatchNormResult<double> qbn_forward(const QTensorT<double>&, const BatchNormParams<double>&, double);
template QTensorT<double> qbn_affine(const QTensorT<double>&, const BatchNormParams<double>&);
template BatchNormGradients<double> qbn_backward(const BatchNormCache<double>&, const BatchNormParams<double>&,
                                                 const QTensorT<double>&);

}  // namespace qinpaint::qnn
