#pragma once

// Shared helpers for the unit tests and the acceptance harness: finite
// difference gradient checks, the pairwise monotonicity probe, and small
// fixtures. Test-only; not part of the library interface.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "slax/slax.hpp"

namespace slax::testing {

// Visits every trainable parameter of the network.
inline void for_each_parameter(Mlp& net, const std::function<void(double&)>& fn) {
    for (DenseLayer& layer : net.layers) {
        for (double& w : layer.w) fn(w);
        for (double& b : layer.b) fn(b);
    }
}

struct FdBatch {
    std::vector<std::array<double, 2>> features;
    std::vector<double> labels;
    std::vector<SloVector> inputs;
    std::vector<std::array<double, 2>> dp_points;
};

inline FdBatch make_fd_batch(const FeatureSpec& spec, int n, Rng& rng) {
    FdBatch b;
    for (int i = 0; i < n; ++i) {
        const SloVector s = sample_slo(spec, rng);
        b.inputs.push_back(s);
        b.features.push_back(orient_features(s, spec));
        b.labels.push_back(rng.next_double() < 0.5 ? 0.0 : 1.0);
    }
    b.dp_points = sample_oriented_points(4, rng);
    return b;
}

// Training-mode loss of one batch under `method`, as a pure function of the
// parameters (running statistics are not updated).
inline double method_loss(Mlp& net, MethodKind method, const FdBatch& b, const TrainConfig& cfg) {
    BatchCache cache;
    forward_train(net, b.features, cache, false);
    double loss = bce_loss(cache.preds, b.labels, cfg.eps_clip);
    if (method == MethodKind::Mol) loss += cfg.k_mol * mol_loss(b.inputs, cache.preds);
    if (method == MethodKind::Regularised) loss += cfg.k_reg * reg_loss(net);
    if (method == MethodKind::Dp) loss += cfg.k_dp * dp_penalty(net, b.dp_points);
    return loss;
}

inline MlpGradients method_gradients(Mlp& net, MethodKind method, const FdBatch& b,
                                     const TrainConfig& cfg) {
    BatchCache cache;
    forward_train(net, b.features, cache, false);
    std::vector<double> dpred(b.labels.size(), 0.0);
    add_bce_gradient(cache.preds, b.labels, dpred);
    if (method == MethodKind::Mol) add_mol_gradient(b.inputs, cache.preds, cfg.k_mol, dpred);
    MlpGradients grads(net);
    backward_train(net, cache, dpred, grads);
    if (method == MethodKind::Regularised) add_reg_gradient(net, cfg.k_reg, grads);
    if (method == MethodKind::Dp) dp_penalty_with_gradient(net, b.dp_points, cfg.k_dp, grads);
    return grads;
}

// Max relative error between analytic gradients and central differences
// over every parameter of the network.
inline double fd_gradient_error(Mlp& net, MethodKind method, const FdBatch& b,
                                const TrainConfig& cfg, double h = 1e-5) {
    const MlpGradients grads = method_gradients(net, method, b, cfg);
    std::vector<double> analytic;
    for (const auto& v : grads.w) analytic.insert(analytic.end(), v.begin(), v.end());
    for (const auto& v : grads.b) analytic.insert(analytic.end(), v.begin(), v.end());
    // Flatten in the same order as the gradient struct.
    std::vector<double*> params;
    for (auto& layer : net.layers)
        for (double& w : layer.w) params.push_back(&w);
    for (auto& layer : net.layers)
        for (double& bb : layer.b) params.push_back(&bb);
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = *params[i];
        *params[i] = saved + h;
        const double up = method_loss(net, method, b, cfg);
        *params[i] = saved - h;
        const double dn = method_loss(net, method, b, cfg);
        *params[i] = saved;
        const double fd = (up - dn) / (2.0 * h);
        const double a = analytic[i];
        const double rel = std::abs(a - fd) / std::max({1e-6, std::abs(a), std::abs(fd)});
        worst = std::max(worst, rel);
    }
    return worst;
}

// Draws one comparable pair (a, b) with a at least as strict as b.
inline std::pair<SloVector, SloVector> sample_comparable_pair(const FeatureSpec& spec, Rng& rng) {
    for (;;) {
        const SloVector a = sample_slo(spec, rng);
        const SloVector b = sample_slo(spec, rng);
        switch (compare_partial(a, b)) {
        case Ordering::Stricter:
        case Ordering::Equal: return {a, b};
        case Ordering::Looser: return {b, a};
        case Ordering::Incomparable: break;
        }
    }
}

// Fraction of comparable probe pairs where the stricter SLA scores higher
// than the looser one beyond the tolerance.
template <class Model>
double monotonicity_violation_rate(const Model& model, const FeatureSpec& spec, int n_pairs,
                                   Rng& rng, double tol = 1e-12) {
    int violations = 0;
    for (int i = 0; i < n_pairs; ++i) {
        const auto [strict, loose] = sample_comparable_pair(spec, rng);
        if (model.probability(strict) > model.probability(loose) + tol) ++violations;
    }
    return static_cast<double>(violations) / static_cast<double>(n_pairs);
}

// Log-log least-squares slope of y against x.
inline double log_log_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double d = static_cast<double>(n) * sxx - sx * sx;
    return (static_cast<double>(n) * sxy - sx * sy) / d;
}

// Brute-force constrained MLE oracle for the relabeling step: enumerates a
// uniform probability grid over the feasible region and returns the best
// log likelihood found. Levels are assigned index by index, and any level
// clashing with an already-assigned ordered peer prunes the whole subtree.
// Exponential in K; callers keep K <= 6.
inline double po_grid_oracle_best_ll(const Dataset& d, int grid, double eps_clip) {
    const auto edges = detail::order_edges(d);
    const std::size_t n = d.size();
    std::vector<double> levels(static_cast<std::size_t>(grid));
    for (int g = 0; g < grid; ++g)
        levels[static_cast<std::size_t>(g)] =
            eps_clip + (1.0 - 2.0 * eps_clip) * static_cast<double>(g) /
                           static_cast<double>(grid - 1);
    std::vector<double> labels;
    for (const Sample& s : d.samples) labels.push_back(s.y);

    // Constraints of index k against already-assigned indices: each edge
    // (i, j) demands p[i] <= p[j], so it binds at depth max(i, j).
    std::vector<std::vector<std::size_t>> at_least(n), at_most(n);
    for (const auto& [i, j] : edges) {
        if (i < j)
            at_least[j].push_back(i);
        else
            at_most[i].push_back(j);
    }

    std::vector<double> p(n, 0.0);
    double best = -std::numeric_limits<double>::infinity();
    const auto term = [&](std::size_t i, double prob) {
        return labels[i] * std::log(prob) + (1.0 - labels[i]) * std::log(1.0 - prob);
    };
    const auto descend = [&](auto&& self, std::size_t k, double acc) -> void {
        if (k == n) {
            best = std::max(best, acc);
            return;
        }
        for (int g = 0; g < grid; ++g) {
            const double v = levels[static_cast<std::size_t>(g)];
            bool too_small = false;
            for (std::size_t i : at_least[k])
                if (v < p[i]) {
                    too_small = true;
                    break;
                }
            if (too_small) continue;
            bool too_large = false;
            for (std::size_t j : at_most[k])
                if (v > p[j]) {
                    too_large = true;
                    break;
                }
            if (too_large) break;
            p[k] = v;
            self(self, k + 1, acc + term(k, v));
        }
    };
    descend(descend, 0, 0.0);
    return best;
}

} // namespace slax::testing
