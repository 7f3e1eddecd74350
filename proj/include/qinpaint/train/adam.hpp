#pragma once

#include <Eigen/Core>

#include <cstdint>

#include "qinpaint/qnn/network.hpp"

namespace qinpaint::train {

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step = 0;
    Eigen::VectorXd first_moment;
    Eigen::VectorXd second_moment;

    /// Zeroed moments for `size` real parameters.
    static AdamState for_size(Eigen::Index size);
};

/// Bias-corrected Adam update applied independently to every component.
void adam_update(Eigen::Ref<Eigen::VectorXd> values, const Eigen::Ref<const Eigen::VectorXd>& grads,
                 AdamState& state, double lr);

/// Steps `params` along its own gradient buffers.
void adam_step(qnn::ParameterSet& params, AdamState& state, double lr);

}  // namespace qinpaint::train
