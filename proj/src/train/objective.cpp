#include "qinpaint/train/objective.hpp"

#include <string>

namespace qinpaint::train {

namespace {

void require_compatible(const QTensor& a, const QTensor& b, const Mask& mask, const char* op) {
    QTensor::require_same_shape(a, b, op);
    if (mask.height() != a.height() || mask.width() != a.width())
        throw ShapeError(std::string(op) + ": mask " + std::to_string(mask.height()) + "x" +
                         std::to_string(mask.width()) + " vs tensor " + to_string(a.shape()));
}

}  // namespace

double masked_loss(const QTensor& pred, const QTensor& target, const Mask& mask) {
    require_compatible(pred, target, mask, "masked_loss");
    const Index n = pred.spatial();
    double loss = 0.0;
    for (int p = 0; p < 4; ++p)
        for (Index c = 0; c < pred.channels(); ++c) {
            const Index base = c * n;
            for (Index i = 0; i < n; ++i) {
                if (!mask.observed(i)) continue;
                const double d = pred.plane(p)(base + i) - target.plane(p)(base + i);
                loss += d * d;
            }
        }
    return loss;
}

QTensor loss_backward(const QTensor& pred, const QTensor& target, const Mask& mask) {
    require_compatible(pred, target, mask, "loss_backward");
    const Index n = pred.spatial();
    QTensor g(pred.shape());
    for (int p = 0; p < 4; ++p)
        for (Index c = 0; c < pred.channels(); ++c) {
            const Index base = c * n;
            for (Index i = 0; i < n; ++i)
                if (mask.observed(i)) g.plane(p)(base + i) = 2.0 * (pred.plane(p)(base + i) - target.plane(p)(base + i));
        }
    return g;
}

QTensor compose_output(const QTensor& observed, const QTensor& estimate, const Mask& mask) {
    require_compatible(observed, estimate, mask, "compose_output");
    QTensor out = estimate;
    const Index n = out.spatial();
    for (int p = 0; p < 4; ++p)
        for (Index c = 0; c < out.channels(); ++c)
            for (Index i = 0; i < n; ++i)
                if (mask.observed(i)) out.plane(p)(c * n + i) = observed.plane(p)(c * n + i);
    return out;
}

}  // namespace qinpaint::train
