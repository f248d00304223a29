#pragma once

// Test-only oracles: central finite differences against the tape gradients,
// and an independent straight-line encoder reimplementation (plain loops, no
// tape, no Eigen) used to cross-check the production forward pass.

#include <cmath>
#include <functional>
#include <vector>

#include "tokendrop/rng.hpp"
#include "tokendrop/tensor.hpp"

namespace oracles {

using tokendrop::Rng;
using tokendrop::TapeT;
using tokendrop::TensorT;

// Rebuilds the graph via `build` (which must read the current contents of
// `inputs`) and compares tape gradients with central finite differences.
// Returns the worst relative error across all elements of all inputs.
inline double fd_check(const std::function<TensorT<double>&(TapeT<double>&)>& build,
                       const std::vector<TensorT<double>*>& inputs, double h = 1e-5) {
    std::vector<std::vector<double>> analytic;
    {
        TapeT<double> tape;
        TensorT<double>& loss = build(tape);
        for (auto* t : inputs) t->grad.clear();
        tape.backward(loss);
        for (auto* t : inputs) analytic.push_back(t->ensure_grad());
    }

    double worst = 0.0;
    for (size_t i = 0; i < inputs.size(); ++i) {
        TensorT<double>& t = *inputs[i];
        for (size_t k = 0; k < t.data.size(); ++k) {
            const double orig = t.data[k];
            t.data[k] = orig + h;
            double f_plus;
            {
                TapeT<double> tape;
                f_plus = build(tape).data[0];
            }
            t.data[k] = orig - h;
            double f_minus;
            {
                TapeT<double> tape;
                f_minus = build(tape).data[0];
            }
            t.data[k] = orig;
            const double fd = (f_plus - f_minus) / (2.0 * h);
            const double g = analytic[i][k];
            const double rel = std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), 1e-6});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

inline void fill_uniform(TensorT<double>& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
    for (auto& v : t.data) v = lo + (hi - lo) * rng.uniform();
}

template <typename S>
void fill_uniform_s(TensorT<S>& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
    for (auto& v : t.data) v = static_cast<S>(lo + (hi - lo) * rng.uniform());
}

}  // namespace oracles
