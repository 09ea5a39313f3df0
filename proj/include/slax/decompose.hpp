#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "slax/error.hpp"
#include "slax/ground_truth.hpp"
#include "slax/losses.hpp"
#include "slax/simplex.hpp"
#include "slax/slo.hpp"

namespace slax {

struct DecomposeConfig {
    int grid_resolution = 21;
    int refine_max_iters = 200;
    double refine_step_tol = 1e-6;
    double constraint_tol = 1e-6;
    double eps_clip = 1e-7;
    // Off by default: with models non-increasing in throughput, raising any
    // theta_n above theta_e2e never helps, so the throughput grid is wasted
    // work. Enable for models without that guarantee.
    bool joint_theta_grid = false;
    int theta_resolution = 5;

    void validate() const {
        if (grid_resolution < 2) throw invalid_argument("DecomposeConfig: grid_resolution must be >= 2");
        if (refine_max_iters < 1) throw invalid_argument("DecomposeConfig: refine_max_iters must be >= 1");
        if (!(refine_step_tol > 0.0)) throw invalid_argument("DecomposeConfig: refine_step_tol must be > 0");
        if (!(constraint_tol > 0.0)) throw invalid_argument("DecomposeConfig: constraint_tol must be > 0");
        if (!(eps_clip > 0.0) || !(eps_clip < 0.5)) throw invalid_argument("DecomposeConfig: bad eps_clip");
        if (theta_resolution < 2) throw invalid_argument("DecomposeConfig: theta_resolution must be >= 2");
    }
};

struct DecompositionResult {
    std::vector<SloVector> parts;
    double model_e2e_prob = 0.0;
    double objective = 0.0;
    double grid_objective = 0.0;
    int refine_iterations = 0;
    bool converged = false;
};

// Adapter so the synthetic acceptance model can stand in for a trained one.
struct GroundTruthModel {
    DomainGroundTruth gt;
    FeatureSpec spec;

    double probability(const SloVector& s) const { return gt_probability(gt, s); }
    double delay_gradient(const SloVector& s) const { return gt_delay_gradient(gt, s); }
};

// Summed negative log acceptance probability, the quantity minimized by the
// decomposition. Probabilities are clamped so the value stays finite.
template <class Model>
double decomposition_objective(std::span<const Model> models, std::span<const SloVector> parts,
                               double eps_clip = 1e-7) {
    if (models.size() != parts.size())
        throw invalid_argument("decomposition_objective: models/parts length mismatch");
    if (models.empty()) throw invalid_argument("decomposition_objective: empty input");
    double acc = 0.0;
    for (std::size_t n = 0; n < models.size(); ++n)
        acc += -std::log(clamp_probability(models[n].probability(parts[n]), eps_clip));
    return acc;
}

namespace detail {

template <class Model>
std::vector<SloVector> parts_from_tau(std::span<const Model> models, std::span<const double> tau,
                                      double theta) {
    (void)models;
    std::vector<SloVector> parts(tau.size());
    for (std::size_t n = 0; n < tau.size(); ++n) parts[n] = {tau[n], theta};
    return parts;
}

} // namespace detail

// Dense enumeration of delay splits (and optionally per-domain throughput
// levels). First strictly better candidate wins, so the lexicographic
// enumeration order fixes tie-breaking.
template <class Model>
std::vector<SloVector> exhaustive_search(std::span<const Model> models, const SloVector& e2e,
                                         const DecomposeConfig& cfg = {}) {
    cfg.validate();
    if (models.empty()) throw invalid_argument("exhaustive_search: no models");
    if (!finite(e2e) || e2e.delay_ms < 0.0)
        throw invalid_argument("exhaustive_search: invalid E2E SLO");
    const int domains = static_cast<int>(models.size());

    std::vector<SloVector> best;
    double best_obj = std::numeric_limits<double>::infinity();
    const auto consider = [&](const std::vector<SloVector>& cand) {
        const double obj = decomposition_objective(models, std::span<const SloVector>(cand),
                                                   cfg.eps_clip);
        if (obj < best_obj) {
            best_obj = obj;
            best = cand;
        }
    };

    if (!cfg.joint_theta_grid) {
        detail::for_each_delay_composition(
            domains, cfg.grid_resolution, e2e.delay_ms, [&](std::span<const double> tau) {
                consider(detail::parts_from_tau(models, tau, e2e.throughput_gbps));
            });
        return best;
    }

    // Joint grid: per-domain throughput levels from theta_e2e up to the
    // domain's interval top, with at least one domain held at theta_e2e so
    // the composed minimum stays on target.
    std::vector<std::vector<double>> levels(models.size());
    for (std::size_t n = 0; n < models.size(); ++n) {
        const double hi = std::max(models[n].spec.throughput_hi_gbps, e2e.throughput_gbps);
        levels[n].resize(static_cast<std::size_t>(cfg.theta_resolution));
        for (int i = 0; i < cfg.theta_resolution; ++i)
            levels[n][static_cast<std::size_t>(i)] =
                e2e.throughput_gbps + (hi - e2e.throughput_gbps) * static_cast<double>(i) /
                                          static_cast<double>(cfg.theta_resolution - 1);
    }
    std::vector<int> pick(models.size(), 0);
    std::vector<SloVector> cand(models.size());
    detail::for_each_delay_composition(
        domains, cfg.grid_resolution, e2e.delay_ms, [&](std::span<const double> tau) {
            std::fill(pick.begin(), pick.end(), 0);
            for (;;) {
                if (std::find(pick.begin(), pick.end(), 0) != pick.end()) {
                    for (std::size_t n = 0; n < models.size(); ++n)
                        cand[n] = {tau[n], levels[n][static_cast<std::size_t>(pick[n])]};
                    consider(cand);
                }
                std::size_t dim = models.size();
                while (dim > 0) {
                    --dim;
                    if (++pick[dim] < cfg.theta_resolution) break;
                    pick[dim] = 0;
                    if (dim == 0) return;
                }
            }
        });
    return best;
}

namespace detail {

struct RefineOutcome {
    std::vector<SloVector> parts;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Projected gradient descent over the delay simplex with backtracking.
// Throughputs are carried through unchanged, so feasibility of the initial
// point is preserved. Objective gradients come from each model's own input
// derivative.
template <class Model>
RefineOutcome refine_impl(std::span<const Model> models, const SloVector& e2e,
                          std::span<const SloVector> initial, const DecomposeConfig& cfg) {
    cfg.validate();
    if (models.size() != initial.size())
        throw invalid_argument("refine: models/parts length mismatch");
    if (!validate_decomposition(initial, e2e, cfg.constraint_tol))
        throw invalid_argument("refine: initial decomposition infeasible");

    RefineOutcome out;
    out.parts.assign(initial.begin(), initial.end());
    out.objective = decomposition_objective(models, std::span<const SloVector>(out.parts),
                                            cfg.eps_clip);

    std::vector<double> tau(models.size());
    for (std::size_t n = 0; n < models.size(); ++n) tau[n] = out.parts[n].delay_ms;
    std::vector<double> grad(models.size());
    std::vector<double> cand_tau(models.size());
    std::vector<SloVector> cand(out.parts.begin(), out.parts.end());

    double step = std::max(e2e.delay_ms, 1.0) / static_cast<double>(cfg.grid_resolution - 1);
    for (int it = 1; it <= cfg.refine_max_iters; ++it) {
        out.iterations = it;
        for (std::size_t n = 0; n < models.size(); ++n) {
            const double p = std::max(models[n].probability(out.parts[n]), cfg.eps_clip);
            grad[n] = -models[n].delay_gradient(out.parts[n]) / p;
        }
        for (std::size_t n = 0; n < models.size(); ++n) cand_tau[n] = tau[n] - step * grad[n];
        project_onto_scaled_simplex(cand_tau, e2e.delay_ms);
        for (std::size_t n = 0; n < models.size(); ++n) cand[n].delay_ms = cand_tau[n];
        const double cand_obj =
            decomposition_objective(models, std::span<const SloVector>(cand), cfg.eps_clip);
        if (cand_obj < out.objective) {
            tau = cand_tau;
            for (std::size_t n = 0; n < models.size(); ++n) out.parts[n] = cand[n];
            out.objective = cand_obj;
            step *= 1.5;
        } else {
            step *= 0.5;
        }
        if (step < cfg.refine_step_tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

} // namespace detail

template <class Model>
std::vector<SloVector> refine(std::span<const Model> models, const SloVector& e2e,
                              std::span<const SloVector> initial, const DecomposeConfig& cfg = {}) {
    return detail::refine_impl(models, e2e, initial, cfg).parts;
}

template <class Model>
DecompositionResult decompose(std::span<const Model> models, const SloVector& e2e,
                              const DecomposeConfig& cfg = {}) {
    const std::vector<SloVector> grid_parts = exhaustive_search(models, e2e, cfg);
    const auto refined = detail::refine_impl(models, e2e, std::span<const SloVector>(grid_parts),
                                             cfg);
    DecompositionResult result;
    result.parts = refined.parts;
    result.objective = refined.objective;
    result.grid_objective =
        decomposition_objective(models, std::span<const SloVector>(grid_parts), cfg.eps_clip);
    result.refine_iterations = refined.iterations;
    result.converged = refined.converged;
    result.model_e2e_prob = std::exp(-result.objective);
    if (!validate_decomposition(result.parts, e2e, cfg.constraint_tol))
        throw error("decompose: result violates the composition constraint");
    return result;
}

inline void write_decomposition_csv(std::ostream& out, const DecompositionResult& r) {
    const std::size_t n = r.parts.size();
    for (std::size_t i = 1; i <= n; ++i) out << "tau_" << i << ',';
    for (std::size_t i = 1; i <= n; ++i) out << "theta_" << i << ',';
    out << "objective,model_prob\n";
    for (const SloVector& s : r.parts) out << detail::format_double(s.delay_ms) << ',';
    for (const SloVector& s : r.parts) out << detail::format_double(s.throughput_gbps) << ',';
    out << detail::format_double(r.objective) << ',' << detail::format_double(r.model_e2e_prob)
        << '\n';
}

} // namespace slax
