#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mrms/common.hpp"
#include "mrms/tensor.hpp"

namespace mrms {

// Per-parameter Adam moments. Defaults are the conventional
// lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    int64_t t = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One bias-corrected Adam update from param.grad.
inline void adam_step(Tensor& param, AdamState& state) {
    const std::size_t n = param.size();
    if (state.m.size() != n) state.m.assign(n, 0.0);
    if (state.v.size() != n) state.v.assign(n, 0.0);
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    const double* g = param.grad().data();
    double* p = param.data().data();
    for (std::size_t i = 0; i < n; ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

// Convenience wrapper stepping a fixed parameter list together.
class Adam {
public:
    Adam(std::vector<Tensor> params, double lr = 1e-3) : params_(std::move(params)) {
        states_.resize(params_.size());
        for (auto& s : states_) s.lr = lr;
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    void step() {
        for (std::size_t i = 0; i < params_.size(); ++i) adam_step(params_[i], states_[i]);
    }

private:
    std::vector<Tensor> params_;
    std::vector<AdamState> states_;
};

}  // namespace mrms
