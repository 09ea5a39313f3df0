#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "slax/dataset.hpp"
#include "slax/error.hpp"
#include "slax/slo.hpp"

namespace slax {

// Two samples conflict when one precedes the other (its label is expected
// to be <= the other's) yet its label is larger. `precedes(i, j)` must be
// a partial order; for SLO data it is preceq on the inputs.
template <class Precedes>
std::vector<int> conflict_counts(std::size_t n, std::span<const double> labels,
                                 Precedes&& precedes) {
    if (labels.size() != n) throw invalid_argument("conflict_counts: length mismatch");
    std::vector<int> counts(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool conflict = (precedes(i, j) && labels[i] > labels[j]) ||
                                  (precedes(j, i) && labels[j] > labels[i]);
            if (conflict) {
                ++counts[i];
                ++counts[j];
            }
        }
    return counts;
}

// Greedy elimination: repeatedly drop the sample with the most conflicts
// (lowest index on ties) until no conflicts remain. Returns a keep flag
// per sample.
template <class Precedes>
std::vector<char> cse_keep_mask(std::size_t n, std::span<const double> labels,
                                Precedes&& precedes) {
    std::vector<int> counts = conflict_counts(n, labels, precedes);
    std::vector<std::vector<std::size_t>> partners(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool conflict = (precedes(i, j) && labels[i] > labels[j]) ||
                                  (precedes(j, i) && labels[j] > labels[i]);
            if (conflict) {
                partners[i].push_back(j);
                partners[j].push_back(i);
            }
        }
    std::vector<char> keep(n, 1);
    for (;;) {
        std::size_t worst = n;
        int worst_count = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (keep[i] && counts[i] > worst_count) {
                worst = i;
                worst_count = counts[i];
            }
        if (worst == n) break;
        keep[worst] = 0;
        counts[worst] = 0;
        for (std::size_t j : partners[worst])
            if (keep[j]) --counts[j];
    }
    return keep;
}

inline std::vector<int> count_conflicts(const Dataset& d) {
    const auto labels = detail::binary_labels_of(d, "count_conflicts");
    return conflict_counts(d.size(), labels, [&](std::size_t i, std::size_t j) {
        return preceq(d.samples[i].x, d.samples[j].x);
    });
}

inline Dataset cse_filter(const Dataset& d) {
    const auto labels = detail::binary_labels_of(d, "cse_filter");
    const auto keep = cse_keep_mask(d.size(), labels, [&](std::size_t i, std::size_t j) {
        return preceq(d.samples[i].x, d.samples[j].x);
    });
    Dataset out;
    out.spec = d.spec;
    out.seed = d.seed;
    out.samples.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        if (keep[i]) out.samples.push_back(d.samples[i]);
    if (out.samples.empty()) throw training_error("cse_filter: all samples eliminated");
    return out;
}

} // namespace slax
