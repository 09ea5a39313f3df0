#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "slax/error.hpp"

namespace slax {

// One SLA point: a delay bound together with a throughput floor.
// Used both for E2E SLAs and for per-domain partial SLAs.
struct SloVector {
    double delay_ms = 0.0;
    double throughput_gbps = 0.0;
};

inline bool finite(const SloVector& s) {
    return std::isfinite(s.delay_ms) && std::isfinite(s.throughput_gbps);
}

// Result of comparing two SLAs under the strictness partial order.
// Stricter means: at most the delay budget and at least the throughput
// floor of the other, with at least one of the two strict.
enum class Ordering { Stricter, Looser, Equal, Incomparable };

inline Ordering compare_partial(const SloVector& a, const SloVector& b) {
    if (!finite(a) || !finite(b)) throw invalid_argument("compare_partial: non-finite SLO");
    const bool delay_le = a.delay_ms <= b.delay_ms;
    const bool delay_ge = a.delay_ms >= b.delay_ms;
    const bool thr_le = a.throughput_gbps <= b.throughput_gbps;
    const bool thr_ge = a.throughput_gbps >= b.throughput_gbps;
    if (delay_le && delay_ge && thr_le && thr_ge) return Ordering::Equal;
    if (delay_le && thr_ge) return Ordering::Stricter;
    if (delay_ge && thr_le) return Ordering::Looser;
    return Ordering::Incomparable;
}

// a is at least as strict as b (Stricter or Equal). This is the convention
// used by the order-aware losses and data filters: equal inputs count as
// ordered in both directions.
inline bool preceq(const SloVector& a, const SloVector& b) {
    const Ordering o = compare_partial(a, b);
    return o == Ordering::Stricter || o == Ordering::Equal;
}

// E2E composition G: delays add up, the throughput floor is the minimum.
inline SloVector compose_e2e(std::span<const SloVector> parts) {
    if (parts.empty()) throw invalid_argument("compose_e2e: empty part list");
    SloVector e2e{0.0, parts[0].throughput_gbps};
    for (const SloVector& p : parts) {
        e2e.delay_ms += p.delay_ms;
        e2e.throughput_gbps = std::min(e2e.throughput_gbps, p.throughput_gbps);
    }
    return e2e;
}

inline SloVector compose_e2e(const std::vector<SloVector>& parts) {
    return compose_e2e(std::span<const SloVector>(parts));
}

// True iff the parts compose to e2e within an absolute tolerance per SLO.
inline bool validate_decomposition(std::span<const SloVector> parts, const SloVector& e2e,
                                   double tol) {
    if (!(tol >= 0.0)) throw invalid_argument("validate_decomposition: tol must be >= 0");
    const SloVector composed = compose_e2e(parts);
    return std::abs(composed.delay_ms - e2e.delay_ms) <= tol &&
           std::abs(composed.throughput_gbps - e2e.throughput_gbps) <= tol;
}

inline bool validate_decomposition(const std::vector<SloVector>& parts, const SloVector& e2e,
                                   double tol) {
    return validate_decomposition(std::span<const SloVector>(parts), e2e, tol);
}

// Sampling intervals plus the fixed monotone orientation of each feature.
// Orientation is (+delay, -throughput): both oriented coordinates grow as
// the SLA gets looser, so a model that is non-decreasing in its inputs is
// exactly order-monotone in the acceptance sense.
struct FeatureSpec {
    double delay_lo_ms = 0.0;
    double delay_hi_ms = 100.0;
    double throughput_lo_gbps = 0.0;
    double throughput_hi_gbps = 1.0;

    void validate() const {
        if (!(delay_lo_ms < delay_hi_ms) || !(throughput_lo_gbps < throughput_hi_gbps))
            throw invalid_argument("FeatureSpec: degenerate interval (hi <= lo)");
        if (!std::isfinite(delay_lo_ms) || !std::isfinite(delay_hi_ms) ||
            !std::isfinite(throughput_lo_gbps) || !std::isfinite(throughput_hi_gbps))
            throw invalid_argument("FeatureSpec: non-finite interval bound");
    }
};

// Min-max normalized, orientation-flipped features. In-interval inputs land
// in [0,1]^2; out-of-interval inputs extrapolate linearly so monotonicity is
// preserved everywhere (no clamping).
inline std::array<double, 2> orient_features(const SloVector& s, const FeatureSpec& spec) {
    spec.validate();
    if (!finite(s)) throw invalid_argument("orient_features: non-finite SLO");
    return {
        (s.delay_ms - spec.delay_lo_ms) / (spec.delay_hi_ms - spec.delay_lo_ms),
        (spec.throughput_hi_gbps - s.throughput_gbps) /
            (spec.throughput_hi_gbps - spec.throughput_lo_gbps),
    };
}

} // namespace slax
