#include "qinpaint/train/adam.hpp"

#include <cmath>
#include <string>

namespace qinpaint::train {

AdamState AdamState::for_size(Eigen::Index size) {
    AdamState s;
    s.first_moment = Eigen::VectorXd::Zero(size);
    s.second_moment = Eigen::VectorXd::Zero(size);
    return s;
}

void adam_update(Eigen::Ref<Eigen::VectorXd> values, const Eigen::Ref<const Eigen::VectorXd>& grads,
                 AdamState& state, double lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
    if (state.step == 0 && state.first_moment.size() == 0) {
        state.first_moment = Eigen::VectorXd::Zero(values.size());
        state.second_moment = Eigen::VectorXd::Zero(values.size());
    }
    if (grads.size() != values.size() || state.first_moment.size() != values.size() ||
        state.second_moment.size() != values.size())
        throw ShapeError("adam: " + std::to_string(values.size()) + " parameters, " + std::to_string(grads.size()) +
                         " gradients, " + std::to_string(state.first_moment.size()) + " moments");

    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(state.beta1, t);
    const double correction2 = 1.0 - std::pow(state.beta2, t);

    state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
    state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * grads.cwiseAbs2();
    const double step_size = lr / correction1;
    const double root_correction2 = std::sqrt(correction2);
    values.array() -= step_size * state.first_moment.array() /
                      (state.second_moment.array().sqrt() / root_correction2 + state.epsilon);
}

void adam_step(qnn::ParameterSet& params, AdamState& state, double lr) {
    Eigen::VectorXd values = params.flatten();
    const Eigen::VectorXd grads = params.flatten_grads();
    adam_update(values, grads, state, lr);
    params.assign(values);
}

}  // namespace qinpaint::train
