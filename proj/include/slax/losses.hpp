#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "slax/error.hpp"
#include "slax/mlp.hpp"
#include "slax/rng.hpp"
#include "slax/slo.hpp"

namespace slax {

inline double clamp_probability(double p, double eps) {
    return std::min(std::max(p, eps), 1.0 - eps);
}

// Mean binary cross entropy with predictions clamped away from {0,1}.
// Labels may be fractional (PO-relabeled data).
inline double bce_loss(std::span<const double> preds, std::span<const double> labels,
                       double eps_clip) {
    if (preds.size() != labels.size()) throw invalid_argument("bce_loss: length mismatch");
    if (preds.empty()) throw invalid_argument("bce_loss: empty batch");
    if (!(eps_clip > 0.0) || !(eps_clip < 0.5)) throw invalid_argument("bce_loss: bad eps_clip");
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double y = labels[i];
        if (!(y >= 0.0 && y <= 1.0)) throw invalid_argument("bce_loss: label outside [0,1]");
        const double p = clamp_probability(preds[i], eps_clip);
        acc += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    }
    return acc / static_cast<double>(preds.size());
}

// Adds d(bce)/d(pred_i) to `dpred`. The clamp only guards the loss value;
// the gradient uses the raw prediction, which combined with the sigmoid
// factor in the backward pass reduces to (pred - label) / m exactly.
inline void add_bce_gradient(std::span<const double> preds, std::span<const double> labels,
                             std::span<double> dpred) {
    const double inv_m = 1.0 / static_cast<double>(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double p = preds[i];
        const double denom = std::max(p * (1.0 - p), 1e-12);
        dpred[i] += (p - labels[i]) / denom * inv_m;
    }
}

// Sum of squared negative weights (biases excluded).
inline double reg_loss(const Mlp& m) {
    double acc = 0.0;
    for (const DenseLayer& layer : m.layers)
        for (double w : layer.w)
            if (w < 0.0) acc += w * w;
    return acc;
}

inline void add_reg_gradient(const Mlp& m, double k, MlpGradients& grads) {
    for (std::size_t l = 0; l < m.layers.size(); ++l)
        for (std::size_t i = 0; i < m.layers[l].w.size(); ++i) {
            const double w = m.layers[l].w[i];
            if (w < 0.0) grads.w[l][i] += k * 2.0 * w;
        }
}

// Mini-batch order loss: sum over ordered pairs (i, j), i != j, of
// max(pred_i - pred_j, 0) whenever x_i is at least as strict as x_j.
// Penalizes prediction pairs that invert the input partial order.
inline double mol_loss(std::span<const SloVector> inputs, std::span<const double> preds) {
    if (inputs.size() != preds.size()) throw invalid_argument("mol_loss: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i)
        for (std::size_t j = 0; j < inputs.size(); ++j) {
            if (i == j) continue;
            if (preceq(inputs[i], inputs[j])) acc += std::max(preds[i] - preds[j], 0.0);
        }
    return acc;
}

inline void add_mol_gradient(std::span<const SloVector> inputs, std::span<const double> preds,
                             double k, std::span<double> dpred) {
    for (std::size_t i = 0; i < inputs.size(); ++i)
        for (std::size_t j = 0; j < inputs.size(); ++j) {
            if (i == j) continue;
            if (preds[i] > preds[j] && preceq(inputs[i], inputs[j])) {
                dpred[i] += k;
                dpred[j] -= k;
            }
        }
}

// Derivative penalty at explicit oriented-feature points:
//   sum over points and input dims of max(0, -dF/dz_d)^2
// evaluated in inference mode (running BN statistics as constants).
inline double dp_penalty(const Mlp& m, std::span<const std::array<double, 2>> points) {
    double acc = 0.0;
    MlpGradients scratch(m);
    for (const auto& z : points)
        for (int dim = 0; dim < 2; ++dim) {
            const double g = accumulate_input_derivative_gradient(m, z, dim, 0.0, scratch);
            const double viol = std::max(0.0, -g);
            acc += viol * viol;
        }
    return acc;
}

// Same penalty, also accumulating k * d(penalty)/d(params) into grads.
inline double dp_penalty_with_gradient(const Mlp& m, std::span<const std::array<double, 2>> points,
                                       double k, MlpGradients& grads) {
    double acc = 0.0;
    MlpGradients scratch(m);
    for (const auto& z : points)
        for (int dim = 0; dim < 2; ++dim) {
            const double g = accumulate_input_derivative_gradient(m, z, dim, 0.0, scratch);
            const double viol = std::max(0.0, -g);
            acc += viol * viol;
            if (viol > 0.0) {
                // d/dg of max(0,-g)^2 is -2*max(0,-g)
                accumulate_input_derivative_gradient(m, z, dim, k * -2.0 * viol, grads);
            }
        }
    return acc;
}

// Uniform points in the oriented unit square. Sampling z directly is the
// image of sampling SLOs uniformly over the feature intervals and orienting.
inline std::vector<std::array<double, 2>> sample_oriented_points(int n, Rng& rng) {
    if (n < 1) throw invalid_argument("sample_oriented_points: n must be >= 1");
    std::vector<std::array<double, 2>> pts(static_cast<std::size_t>(n));
    for (auto& z : pts) {
        z[0] = rng.next_double();
        z[1] = rng.next_double();
    }
    return pts;
}

inline double dp_loss(const Mlp& m, const FeatureSpec& spec, int n_points, Rng& rng) {
    spec.validate();
    const auto pts = sample_oriented_points(n_points, rng);
    return dp_penalty(m, pts);
}

} // namespace slax
