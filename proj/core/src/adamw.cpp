#include "promptaug/error.hpp"
#include "promptaug/probe.hpp"

#include <cmath>

namespace promptaug::probe {

void adamw_step(std::span<double> params, std::span<const double> grads, AdamWState& state, double lr,
                double beta1, double beta2, double eps, double weight_decay) {
    if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw DataError("adamw: parameter, gradient and state sizes differ");
    }
    for (const double g : grads) {
        if (!std::isfinite(g)) {
            throw DataError("adamw: non-finite gradient");
        }
    }
    ++state.t;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        const double p = params[i];
        params[i] = p - lr * (m_hat / (std::sqrt(v_hat) + eps)) - lr * weight_decay * p;
    }
}

EarlyStopper::EarlyStopper(int patience) : m_patience(patience) {
    if (patience < 1) {
        throw ConfigError("patience must be at least 1");
    }
}

bool EarlyStopper::update(int epoch, double loss) {
    if (m_best_epoch < 0 || loss < m_best_loss) {
        m_best_epoch = epoch;
        m_best_loss = loss;
        m_bad_epochs = 0;
        return true;
    }
    ++m_bad_epochs;
    return false;
}

} // namespace promptaug::probe
