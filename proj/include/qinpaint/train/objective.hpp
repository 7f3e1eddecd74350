#pragma once

#include "qinpaint/imaging/mask.hpp"
#include "qinpaint/qtensor.hpp"

namespace qinpaint::train {

using imaging::Mask;

/// ||P_Omega(pred - target)||_F^2, summed over all four components of every
/// observed entry (the real part included).
double masked_loss(const QTensor& pred, const QTensor& target, const Mask& mask);

/// Gradient of masked_loss with respect to `pred`: 2 (pred - target) on Omega, 0 elsewhere.
QTensor loss_backward(const QTensor& pred, const QTensor& target, const Mask& mask);

/// P_Omega(observed) + P_Omega^c(estimate): observed entries are copied bit-exactly.
QTensor compose_output(const QTensor& observed, const QTensor& estimate, const Mask& mask);

}  // namespace qinpaint::train
