#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "slax/error.hpp"

namespace slax {

namespace detail {

// Enumerates delay splits tau_n = tau_e2e * k_n / (resolution - 1) over all
// integer compositions of resolution - 1 into `domains` parts, in
// lexicographic order of (k_1, ..., k_{N-1}). `fn` is called with each
// candidate.
template <class Fn>
void for_each_delay_composition(int domains, int resolution, double tau_e2e, Fn&& fn) {
    const int ticks = resolution - 1;
    std::vector<int> k(static_cast<std::size_t>(domains), 0);
    std::vector<double> tau(static_cast<std::size_t>(domains), 0.0);
    const double unit = tau_e2e / static_cast<double>(ticks);
    auto recurse = [&](auto&& self, int dim, int remaining) -> void {
        if (dim == domains - 1) {
            k[static_cast<std::size_t>(dim)] = remaining;
            for (int n = 0; n < domains; ++n)
                tau[static_cast<std::size_t>(n)] = unit * k[static_cast<std::size_t>(n)];
            fn(std::span<const double>(tau));
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            k[static_cast<std::size_t>(dim)] = v;
            self(self, dim + 1, remaining - v);
        }
    };
    recurse(recurse, 0, ticks);
}

} // namespace detail

// Euclidean projection of x onto { v : v_i >= 0, sum v_i = total }.
// Sort-based threshold algorithm, O(n log n).
inline void project_onto_scaled_simplex(std::vector<double>& x, double total) {
    if (x.empty()) throw invalid_argument("simplex projection: empty vector");
    if (!(total >= 0.0)) throw invalid_argument("simplex projection: total must be >= 0");
    std::vector<double> u(x);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cumulative = 0.0;
    double theta = 0.0;
    int support = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        cumulative += u[i];
        const double candidate = (cumulative - total) / static_cast<double>(i + 1);
        if (u[i] - candidate > 0.0) {
            theta = candidate;
            support = static_cast<int>(i + 1);
        }
    }
    if (support == 0) theta = (cumulative - total) / static_cast<double>(u.size());
    for (double& v : x) v = std::max(0.0, v - theta);
}

} // namespace slax
