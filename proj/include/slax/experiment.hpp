#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "slax/dataset.hpp"
#include "slax/decompose.hpp"
#include "slax/error.hpp"
#include "slax/ground_truth.hpp"
#include "slax/rng.hpp"
#include "slax/slo.hpp"
#include "slax/train.hpp"

namespace slax {

struct DomainSetup {
    DomainGroundTruth gt;
    FeatureSpec spec;
};

struct ExperimentConfig {
    std::vector<DomainSetup> domains;
    SloVector e2e{100.0, 0.5};
    std::vector<int> sample_sizes{50, 100, 150, 200};
    std::vector<MethodKind> methods{kAllMethods.begin(), kAllMethods.end()};
    int repetitions = 50;
    std::uint64_t base_seed = 1;
    TrainConfig train;
    DecomposeConfig decompose;
    int optimum_grid_resolution = 201;
    std::string output_dir = "out";

    void validate() const {
        if (domains.empty()) throw invalid_argument("ExperimentConfig: need at least one domain");
        for (const DomainSetup& d : domains) {
            d.gt.validate();
            d.spec.validate();
        }
        if (!finite(e2e) || e2e.delay_ms < 0.0)
            throw invalid_argument("ExperimentConfig: invalid E2E SLO");
        if (sample_sizes.empty()) throw invalid_argument("ExperimentConfig: no sample sizes");
        for (int k : sample_sizes)
            if (k < 5) throw invalid_argument("ExperimentConfig: sample sizes must be >= 5");
        if (methods.empty()) throw invalid_argument("ExperimentConfig: no methods");
        if (repetitions < 1) throw invalid_argument("ExperimentConfig: repetitions must be >= 1");
        if (optimum_grid_resolution < 2)
            throw invalid_argument("ExperimentConfig: optimum_grid_resolution must be >= 2");
        train.validate();
        decompose.validate();
    }
};

// Three domains calibrated so the optimal E2E acceptance probability of the
// default (100 ms, 0.5 Gbps) SLA sits comfortably inside (0.3, 0.9).
inline ExperimentConfig default_experiment_config() {
    ExperimentConfig cfg;
    cfg.domains = {
        {{0.12, 3.0, -1.0}, {}},
        {{0.18, 4.0, -1.2}, {}},
        {{0.09, 2.5, -0.8}, {}},
    };
    return cfg;
}

struct RepetitionRow {
    MethodKind method = MethodKind::Vanilla;
    int sample_size = 0;
    int rep = 0;
    double e2e_prob = 0.0;  // product of ground-truth probabilities at the parts
    double objective = 0.0; // model objective at the returned parts
    double train_ms = 0.0;  // summed model-building wall time across domains
    std::string status;     // "ok" or the error class that stopped the row
};

struct AggregateRow {
    MethodKind method = MethodKind::Vanilla;
    int sample_size = 0;
    double mean_prob = 0.0;
    double sd_prob = 0.0;
    double mean_train_ms = 0.0;
    long n_ok = 0;
    long n_fail = 0;
};

struct ExperimentReport {
    OptimalDecomposition optimum;
    std::vector<RepetitionRow> raw;
    std::vector<AggregateRow> aggregates;
};

// One train-decompose-score pass. The RNG substream is keyed by
// (method, K, rep, domain), so any row can be reproduced in isolation.
inline RepetitionRow run_repetition(const ExperimentConfig& cfg, MethodKind method, int K,
                                    int rep) {
    cfg.validate();
    RepetitionRow row;
    row.method = method;
    row.sample_size = K;
    row.rep = rep;
    const auto method_id = static_cast<std::uint64_t>(method);
    try {
        std::vector<RiskModel> models;
        models.reserve(cfg.domains.size());
        for (std::size_t n = 0; n < cfg.domains.size(); ++n) {
            const std::uint64_t seed =
                seed_path(cfg.base_seed, {method_id, static_cast<std::uint64_t>(K),
                                          static_cast<std::uint64_t>(rep), n});
            Rng rng(seed);
            const Dataset data =
                generate_dataset(cfg.domains[n].gt, cfg.domains[n].spec, K, rng, seed);
            models.push_back(train(data, method, cfg.train, rng));
            row.train_ms += models.back().wall_ms;
        }
        const DecompositionResult dec =
            decompose(std::span<const RiskModel>(models), cfg.e2e, cfg.decompose);
        row.objective = dec.objective;
        row.e2e_prob = 1.0;
        for (std::size_t n = 0; n < cfg.domains.size(); ++n)
            row.e2e_prob *= gt_probability(cfg.domains[n].gt, dec.parts[n]);
        row.status = "ok";
    } catch (const training_error&) {
        row.status = "training_error";
        row.e2e_prob = std::numeric_limits<double>::quiet_NaN();
        row.objective = std::numeric_limits<double>::quiet_NaN();
    } catch (const convergence_error&) {
        row.status = "convergence_error";
        row.e2e_prob = std::numeric_limits<double>::quiet_NaN();
        row.objective = std::numeric_limits<double>::quiet_NaN();
    }
    return row;
}

namespace detail {

inline AggregateRow aggregate_rows(MethodKind method, int K,
                                   std::span<const RepetitionRow> rows) {
    AggregateRow agg;
    agg.method = method;
    agg.sample_size = K;
    double sum = 0.0, time_sum = 0.0;
    for (const RepetitionRow& r : rows) {
        if (r.status != "ok") {
            ++agg.n_fail;
            continue;
        }
        ++agg.n_ok;
        sum += r.e2e_prob;
        time_sum += r.train_ms;
    }
    if (agg.n_ok > 0) {
        agg.mean_prob = sum / static_cast<double>(agg.n_ok);
        agg.mean_train_ms = time_sum / static_cast<double>(agg.n_ok);
    }
    if (agg.n_ok > 1) {
        double ss = 0.0;
        for (const RepetitionRow& r : rows)
            if (r.status == "ok") {
                const double d = r.e2e_prob - agg.mean_prob;
                ss += d * d;
            }
        agg.sd_prob = std::sqrt(ss / static_cast<double>(agg.n_ok - 1));
    }
    return agg;
}

} // namespace detail

// Full sweep over methods x sample sizes x repetitions. Emits one
// machine-readable progress line per repetition when `progress` is given.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                       std::ostream* progress = nullptr) {
    cfg.validate();
    ExperimentReport report;
    std::vector<DomainGroundTruth> gts;
    for (const DomainSetup& d : cfg.domains) gts.push_back(d.gt);
    report.optimum = optimal_decomposition(gts, cfg.e2e, cfg.optimum_grid_resolution);

    for (MethodKind method : cfg.methods)
        for (int K : cfg.sample_sizes) {
            const std::size_t first = report.raw.size();
            for (int rep = 0; rep < cfg.repetitions; ++rep) {
                report.raw.push_back(run_repetition(cfg, method, K, rep));
                if (progress) {
                    const RepetitionRow& r = report.raw.back();
                    *progress << "progress method=" << method_name(method) << " K=" << K
                              << " rep=" << rep + 1 << '/' << cfg.repetitions
                              << " status=" << r.status
                              << " prob=" << detail::format_double(r.e2e_prob) << '\n';
                }
            }
            report.aggregates.push_back(detail::aggregate_rows(
                method, K,
                std::span<const RepetitionRow>(report.raw.data() + first,
                                               report.raw.size() - first)));
        }
    return report;
}

inline void write_raw_csv(std::ostream& out, std::span<const RepetitionRow> rows) {
    out << "method,K,rep,e2e_prob,objective,train_ms,status\n";
    for (const RepetitionRow& r : rows)
        out << method_name(r.method) << ',' << r.sample_size << ',' << r.rep << ','
            << detail::format_double(r.e2e_prob) << ',' << detail::format_double(r.objective)
            << ',' << detail::format_double(r.train_ms) << ',' << r.status << '\n';
}

// Wall-clock means live in a separate file (write_timing_csv) so this one
// is byte-identical across reruns of the same config and seed.
inline void write_aggregates_csv(std::ostream& out, std::span<const AggregateRow> rows) {
    out << "method,K,mean_prob,sd_prob,n_ok,n_fail\n";
    for (const AggregateRow& r : rows)
        out << method_name(r.method) << ',' << r.sample_size << ','
            << detail::format_double(r.mean_prob) << ',' << detail::format_double(r.sd_prob)
            << ',' << r.n_ok << ',' << r.n_fail << '\n';
}

inline void write_timing_csv(std::ostream& out, std::span<const AggregateRow> rows) {
    out << "method,K,mean_train_ms\n";
    for (const AggregateRow& r : rows)
        out << method_name(r.method) << ',' << r.sample_size << ','
            << detail::format_double(r.mean_train_ms) << '\n';
}

inline void write_optimum_csv(std::ostream& out, const OptimalDecomposition& opt) {
    const std::size_t n = opt.parts.size();
    for (std::size_t i = 1; i <= n; ++i) out << "tau_" << i << ',';
    for (std::size_t i = 1; i <= n; ++i) out << "theta_" << i << ',';
    out << "prob\n";
    for (const SloVector& s : opt.parts) out << detail::format_double(s.delay_ms) << ',';
    for (const SloVector& s : opt.parts) out << detail::format_double(s.throughput_gbps) << ',';
    out << detail::format_double(opt.probability) << '\n';
}

inline void write_report_files(const ExperimentReport& report, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const auto open = [&dir](const char* name) {
        std::ofstream out(std::filesystem::path(dir) / name);
        if (!out) throw io_error(std::string("cannot open for writing: ") + name);
        return out;
    };
    auto raw = open("raw.csv");
    write_raw_csv(raw, report.raw);
    auto agg = open("aggregates.csv");
    write_aggregates_csv(agg, report.aggregates);
    auto timing = open("timing.csv");
    write_timing_csv(timing, report.aggregates);
    auto opt = open("optimum.csv");
    write_optimum_csv(opt, report.optimum);
}

} // namespace slax
