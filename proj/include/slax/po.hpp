#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "slax/dataset.hpp"
#include "slax/error.hpp"
#include "slax/losses.hpp"
#include "slax/slo.hpp"

namespace slax {

struct PoOptions {
    int max_iters = 5000;        // outer ascent iterations
    double step_tol = 1e-12;     // stop when the iterate moves less than this
    long inner_max_sweeps = 20000;
    double feasibility_tol = 1e-10;
    double change_tol = 1e-13;
    double eps_clip = 1e-7;

    void validate() const {
        if (max_iters < 1) throw invalid_argument("PoOptions: max_iters must be >= 1");
        if (!(step_tol > 0.0)) throw invalid_argument("PoOptions: step_tol must be > 0");
        if (inner_max_sweeps < 1) throw invalid_argument("PoOptions: inner_max_sweeps must be >= 1");
        if (!(feasibility_tol > 0.0)) throw invalid_argument("PoOptions: feasibility_tol must be > 0");
        if (!(change_tol > 0.0)) throw invalid_argument("PoOptions: change_tol must be > 0");
        if (!(eps_clip > 0.0) || !(eps_clip < 0.5)) throw invalid_argument("PoOptions: bad eps_clip");
    }
};

// Bernoulli log likelihood of binary outcomes y under probabilities p,
// with p clamped away from {0,1} so the value stays finite.
inline double po_log_likelihood(std::span<const double> probs, std::span<const double> labels,
                                double eps_clip) {
    return -static_cast<double>(probs.size()) * bce_loss(probs, labels, eps_clip);
}

namespace detail {

// Directed constraints p[first] <= p[second] induced by the input order.
inline std::vector<std::pair<std::size_t, std::size_t>> order_edges(const Dataset& d) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = i + 1; j < d.size(); ++j) {
            switch (compare_partial(d.samples[i].x, d.samples[j].x)) {
            case Ordering::Stricter: edges.emplace_back(i, j); break;
            case Ordering::Looser: edges.emplace_back(j, i); break;
            case Ordering::Equal:
                edges.emplace_back(i, j);
                edges.emplace_back(j, i);
                break;
            case Ordering::Incomparable: break;
            }
        }
    return edges;
}

// Euclidean projection onto { eps <= p_i <= 1-eps } intersected with the
// pairwise halfspaces { p_i <= p_j }, by Dykstra alternating projections.
// `corr` carries one correction per edge coordinate plus one per box
// coordinate and must be sized 2*edges+K (zeros on first use are fine to
// reuse across calls since the routine resets them).
class PolytopeProjector {
  public:
    PolytopeProjector(std::vector<std::pair<std::size_t, std::size_t>> edges, std::size_t n,
                      const PoOptions& opts)
        : edges_(std::move(edges)), n_(n), opts_(opts), corr_i_(edges_.size()),
          corr_j_(edges_.size()), corr_box_(n) {}

    // Projects in place. Returns the residual infeasibility reached.
    double project(std::vector<double>& p) {
        std::fill(corr_i_.begin(), corr_i_.end(), 0.0);
        std::fill(corr_j_.begin(), corr_j_.end(), 0.0);
        std::fill(corr_box_.begin(), corr_box_.end(), 0.0);
        const double lo = opts_.eps_clip, hi = 1.0 - opts_.eps_clip;
        double residual = 0.0;
        for (long sweep = 0; sweep < opts_.inner_max_sweeps; ++sweep) {
            double max_change = 0.0;
            for (std::size_t e = 0; e < edges_.size(); ++e) {
                const auto [i, j] = edges_[e];
                const double vi = p[i] + corr_i_[e];
                const double vj = p[j] + corr_j_[e];
                double ni = vi, nj = vj;
                if (vi > vj) ni = nj = 0.5 * (vi + vj);
                corr_i_[e] = vi - ni;
                corr_j_[e] = vj - nj;
                max_change = std::max({max_change, std::abs(ni - p[i]), std::abs(nj - p[j])});
                p[i] = ni;
                p[j] = nj;
            }
            for (std::size_t i = 0; i < n_; ++i) {
                const double v = p[i] + corr_box_[i];
                const double nv = std::clamp(v, lo, hi);
                corr_box_[i] = v - nv;
                max_change = std::max(max_change, std::abs(nv - p[i]));
                p[i] = nv;
            }
            residual = 0.0;
            for (const auto& [i, j] : edges_) residual = std::max(residual, p[i] - p[j]);
            for (std::size_t i = 0; i < n_; ++i)
                residual = std::max({residual, lo - p[i], p[i] - hi});
            if (residual <= opts_.feasibility_tol && max_change <= opts_.change_tol)
                return residual;
        }
        throw convergence_error("po_labels: polytope projection did not converge",
                                opts_.inner_max_sweeps, residual);
    }

    const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }

  private:
    std::vector<std::pair<std::size_t, std::size_t>> edges_;
    std::size_t n_;
    PoOptions opts_;
    std::vector<double> corr_i_, corr_j_, corr_box_;
};

} // namespace detail

// Maximum-likelihood relabeling under the order constraints (the labels
// become the constrained MLE of per-sample acceptance probabilities).
// Solved by projected gradient ascent on the log likelihood over the order
// polytope: from the feasible center, step along the (sup-norm normalized)
// likelihood gradient, project back, and backtrack until the step improves
// the likelihood. Stops once the iterate stops moving or no step along the
// projected gradient improves.
inline Dataset po_labels(const Dataset& d, const PoOptions& opts = {}) {
    opts.validate();
    if (d.samples.empty()) throw invalid_argument("po_labels: empty dataset");
    const std::vector<double> y = detail::binary_labels_of(d, "po_labels");
    const std::size_t n = y.size();
    detail::PolytopeProjector projector(detail::order_edges(d), n, opts);

    // 0.5 everywhere satisfies every order constraint, so the ascent starts
    // inside the polytope.
    std::vector<double> p(n, 0.5);
    double ll = po_log_likelihood(p, y, opts.eps_clip);

    std::vector<double> grad(n), cand(n);
    double alpha = 0.25;
    bool converged = false;
    int iter = 0;
    double movement = 0.0;
    for (; iter < opts.max_iters && !converged; ++iter) {
        double scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            grad[i] = (y[i] - p[i]) / (p[i] * (1.0 - p[i]));
            scale = std::max(scale, std::abs(grad[i]));
        }
        if (scale == 0.0) {
            converged = true;
            break;
        }
        bool accepted = false;
        for (; alpha >= 1e-13; alpha *= 0.5) {
            for (std::size_t i = 0; i < n; ++i) cand[i] = p[i] + alpha * grad[i] / scale;
            projector.project(cand);
            const double cand_ll = po_log_likelihood(cand, y, opts.eps_clip);
            if (cand_ll > ll) {
                movement = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    movement = std::max(movement, std::abs(cand[i] - p[i]));
                p.swap(cand);
                ll = cand_ll;
                accepted = true;
                alpha = std::min(0.25, alpha * 2.0);
                break;
            }
        }
        if (!accepted || movement <= opts.step_tol) converged = true;
    }
    if (!converged)
        throw convergence_error("po_labels: ascent did not converge", iter, movement);

    Dataset out;
    out.spec = d.spec;
    out.seed = d.seed;
    out.samples = d.samples;
    for (std::size_t i = 0; i < n; ++i) out.samples[i].y = p[i];
    return out;
}

} // namespace slax
