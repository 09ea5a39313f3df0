#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "slax/dataset.hpp"
#include "slax/error.hpp"
#include "slax/rng.hpp"
#include "slax/simplex.hpp"
#include "slax/slo.hpp"

namespace slax {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Parametric monotone acceptance model used as the simulator oracle:
//   P(tau, theta) = logistic(a_delay * tau - b_thr * theta + c_off)
// with a_delay, b_thr > 0, so P is non-decreasing in the delay budget and
// non-increasing in the throughput floor.
struct DomainGroundTruth {
    double a_delay = 0.12; // per ms
    double b_thr = 3.0;    // per Gbps
    double c_off = -1.0;

    void validate() const {
        if (!(a_delay > 0.0) || !(b_thr > 0.0) || !std::isfinite(c_off))
            throw invalid_argument("DomainGroundTruth: a_delay and b_thr must be > 0, c finite");
    }
};

inline double gt_probability(const DomainGroundTruth& gt, const SloVector& s) {
    gt.validate();
    if (!finite(s)) throw invalid_argument("gt_probability: non-finite SLO");
    return logistic(gt.a_delay * s.delay_ms - gt.b_thr * s.throughput_gbps + gt.c_off);
}

// dP/d(delay) at s; used by the oracle's refinement step.
inline double gt_delay_gradient(const DomainGroundTruth& gt, const SloVector& s) {
    const double p = gt_probability(gt, s);
    return gt.a_delay * p * (1.0 - p);
}

inline SloVector sample_slo(const FeatureSpec& spec, Rng& rng) {
    spec.validate();
    return {rng.uniform(spec.delay_lo_ms, spec.delay_hi_ms),
            rng.uniform(spec.throughput_lo_gbps, spec.throughput_hi_gbps)};
}

// K uniform SLO draws, each labeled by a coin toss with the ground-truth
// acceptance probability. Draw order per sample: delay, throughput, coin.
inline Dataset generate_dataset(const DomainGroundTruth& gt, const FeatureSpec& spec, int count,
                                Rng& rng, std::uint64_t recorded_seed = 0) {
    if (count < 1) throw invalid_argument("generate_dataset: K must be >= 1");
    gt.validate();
    Dataset d;
    d.spec = spec;
    d.seed = recorded_seed;
    d.samples.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        Sample s;
        s.x = sample_slo(spec, rng);
        const double p = gt_probability(gt, s.x);
        s.y = rng.next_double() < p ? 1.0 : 0.0;
        d.samples.push_back(s);
    }
    return d;
}

struct OptimalDecomposition {
    std::vector<SloVector> parts;
    double probability = 0.0; // E2E acceptance probability at the optimum
};

// Brute-force theoretical optimum: dense grid over the delay simplex with
// every theta_n fixed at theta_e2e (raising any theta_n above the E2E floor
// can only lower a non-increasing P_n and cannot change the composed min),
// followed by projected-gradient refinement of the best grid point.
inline OptimalDecomposition optimal_decomposition(std::span<const DomainGroundTruth> gts,
                                                  const SloVector& e2e, int grid_res) {
    if (gts.empty()) throw invalid_argument("optimal_decomposition: need at least one domain");
    if (grid_res < 2) throw invalid_argument("optimal_decomposition: grid_res must be >= 2");
    if (!finite(e2e) || e2e.delay_ms < 0.0 || e2e.throughput_gbps < 0.0)
        throw invalid_argument("optimal_decomposition: infeasible E2E SLA");
    for (const DomainGroundTruth& gt : gts) gt.validate();

    const int domains = static_cast<int>(gts.size());
    auto log_objective = [&](std::span<const double> tau) {
        double acc = 0.0;
        for (int n = 0; n < domains; ++n)
            acc += std::log(gt_probability(gts[static_cast<std::size_t>(n)],
                                           {tau[static_cast<std::size_t>(n)], e2e.throughput_gbps}));
        return acc;
    };

    std::vector<double> best;
    double best_log = -std::numeric_limits<double>::infinity();
    detail::for_each_delay_composition(domains, grid_res, e2e.delay_ms,
                                       [&](std::span<const double> tau) {
                                           const double v = log_objective(tau);
                                           if (v > best_log) {
                                               best_log = v;
                                               best.assign(tau.begin(), tau.end());
                                           }
                                       });

    // Local refinement: projected gradient ascent on the delay simplex.
    std::vector<double> grad(best.size());
    std::vector<double> cand(best.size());
    double step = e2e.delay_ms / static_cast<double>(grid_res - 1);
    if (step <= 0.0) step = 1.0;
    for (int iter = 0; iter < 500 && step > 1e-12; ++iter) {
        for (int n = 0; n < domains; ++n) {
            const SloVector s{best[static_cast<std::size_t>(n)], e2e.throughput_gbps};
            const double p = gt_probability(gts[static_cast<std::size_t>(n)], s);
            grad[static_cast<std::size_t>(n)] = gts[static_cast<std::size_t>(n)].a_delay * (1.0 - p);
        }
        for (std::size_t n = 0; n < best.size(); ++n) cand[n] = best[n] + step * grad[n];
        project_onto_scaled_simplex(cand, e2e.delay_ms);
        if (log_objective(cand) > best_log) {
            best.swap(cand);
            best_log = log_objective(best);
            step *= 1.5;
        } else {
            step *= 0.5;
        }
    }

    OptimalDecomposition result;
    result.parts.reserve(best.size());
    for (double tau : best) result.parts.push_back({tau, e2e.throughput_gbps});
    result.probability = std::exp(best_log);
    return result;
}

} // namespace slax
