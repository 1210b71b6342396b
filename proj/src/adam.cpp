#include "barb/adam.hpp"

#include <cmath>
#include <string>

#include "barb/errors.hpp"

namespace barb {

AdamState AdamState::init(const std::vector<Tensor*>& params, AdamConfig config) {
    if (config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 || config.beta2 >= 1.0) {
        throw ValueError("adam: betas must lie in [0,1)");
    }
    if (config.epsilon <= 0.0) throw ValueError("adam: epsilon must be > 0");
    AdamState st;
    st.config = config;
    st.m.reserve(params.size());
    st.v.reserve(params.size());
    for (const Tensor* p : params) {
        st.m.emplace_back(p->size(), 0.0);
        st.v.emplace_back(p->size(), 0.0);
    }
    return st;
}

void adam_step(const std::vector<Tensor*>& params, AdamState& state) {
    if (params.size() != state.m.size()) {
        throw DimensionError("adam: parameter count does not match optimizer state");
    }
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double b1 = state.config.beta1, b2 = state.config.beta2;
    const double corr1 = 1.0 - std::pow(b1, t);
    const double corr2 = 1.0 - std::pow(b2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        if (!p.has_grad()) throw StateError("adam: parameter " + std::to_string(k) + " has no gradient");
        if (p.size() != state.m[k].size()) {
            throw DimensionError("adam: moment shape does not match parameter " + std::to_string(k));
        }
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = p.grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double mhat = m[i] / corr1;
            const double vhat = v[i] / corr2;
            p.data[i] -= state.config.learning_rate * mhat / (std::sqrt(vhat) + state.config.epsilon);
        }
    }
}

}  // namespace barb
