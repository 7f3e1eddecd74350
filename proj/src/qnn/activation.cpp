#include <cmath>
#include <string>

#include "qinpaint/qnn/layers.hpp"

namespace qinpaint::qnn {

std::string_view to_string(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::None: return "none";
        case ActivationKind::ReLU: return "relu";
        case ActivationKind::LeakyReLU: return "leaky_relu";
        case ActivationKind::Sigmoid: return "sigmoid";
        case ActivationKind::Tanh: return "tanh";
    }
    return "none";
}

ActivationKind activation_from_string(std::string_view name) {
    if (name == "none") return ActivationKind::None;
    if (name == "relu") return ActivationKind::ReLU;
    if (name == "leaky_relu") return ActivationKind::LeakyReLU;
    if (name == "sigmoid") return ActivationKind::Sigmoid;
    if (name == "tanh") return ActivationKind::Tanh;
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

template <typename S>
QTensorT<S> split_activation_forward(const QTensorT<S>& input, const Activation& f) {
    QTensorT<S> out = input;
    auto& d = out.planes();
    const S slope = S(f.slope);
    switch (f.kind) {
        case ActivationKind::None: break;
        case ActivationKind::ReLU: d = d.cwiseMax(S(0)); break;
        case ActivationKind::LeakyReLU:
            d = d.unaryExpr([slope](S v) { return v > S(0) ? v : slope * v; });
            break;
        case ActivationKind::Sigmoid:
            d = d.unaryExpr([](S v) { return S(1) / (S(1) + std::exp(-v)); });
            break;
        case ActivationKind::Tanh: d = d.array().tanh().matrix(); break;
    }
    return out;
}

template <typename S>
QTensorT<S> split_activation_backward(const QTensorT<S>& pre_activation, const QTensorT<S>& grad_out,
                                      const Activation& f) {
    QTensorT<S>::require_same_shape(pre_activation, grad_out, "split_activation_backward");
    QTensorT<S> g = grad_out;
    const auto& x = pre_activation.planes().array();
    auto d = g.planes().array();
    const S slope = S(f.slope);
    switch (f.kind) {
        case ActivationKind::None: break;
        case ActivationKind::ReLU: d *= (x > S(0)).template cast<S>(); break;
        case ActivationKind::LeakyReLU:
            d *= x.unaryExpr([slope](S v) { return v > S(0) ? S(1) : slope; });
            break;
        case ActivationKind::Sigmoid:
            d *= x.unaryExpr([](S v) {
                const S s = S(1) / (S(1) + std::exp(-v));
                return s * (S(1) - s);
            });
            break;
        case ActivationKind::Tanh:
            d *= x.unaryExpr([](S v) {
                const S t = std::tanh(v);
                return S(1) - t * t;
            });
            break;
    }
    return g;
}

template QTensorT<double> split_activation_forward(const QTensorT<double>&, const Activation&);
template QTensorT<double> split_activation_backward(const QTensorT<double>&, const QTensorT<double>&,
                                                    const Activation&);

}  // namespace qinpaint::qnn
