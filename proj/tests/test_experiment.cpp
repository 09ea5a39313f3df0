#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <vector>

#include "slax/experiment.hpp"

using namespace slax;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg = default_experiment_config();
    cfg.sample_sizes = {10};
    cfg.repetitions = 2;
    cfg.methods = {MethodKind::Vanilla, MethodKind::Cse};
    cfg.train.max_epochs = 60;
    cfg.train.patience = 20;
    cfg.optimum_grid_resolution = 41;
    return cfg;
}

} // namespace

TEST_CASE("the E2E score is the product of per-domain probabilities", "[experiment]") {
    // With a = b = 1 and c = 0, a part at tau = logit(p) + theta scores
    // exactly p, so three such parts must multiply out.
    const DomainGroundTruth gt{1.0, 1.0, 0.0};
    const std::array<double, 3> per_domain{0.9, 0.8, 0.9};
    double product = 1.0;
    for (double p : per_domain) {
        const SloVector part{std::log(p / (1.0 - p)) + 0.5, 0.5};
        product *= gt_probability(gt, part);
    }
    CHECK_THAT(product, Catch::Matchers::WithinAbs(0.648, 1e-9));
}

TEST_CASE("a repetition is reproducible from its coordinates", "[experiment]") {
    const ExperimentConfig cfg = small_config();
    const RepetitionRow a = run_repetition(cfg, MethodKind::Vanilla, 10, 1);
    const RepetitionRow b = run_repetition(cfg, MethodKind::Vanilla, 10, 1);
    CHECK(a.status == "ok");
    CHECK(a.status == b.status);
    CHECK(a.e2e_prob == b.e2e_prob);
    CHECK(a.objective == b.objective);
    CHECK(a.method == b.method);
    CHECK(a.sample_size == b.sample_size);
    CHECK(a.rep == b.rep);
    CHECK(a.train_ms > 0.0);
}

TEST_CASE("different repetitions see different data", "[experiment]") {
    const ExperimentConfig cfg = small_config();
    const RepetitionRow a = run_repetition(cfg, MethodKind::Vanilla, 10, 0);
    const RepetitionRow b = run_repetition(cfg, MethodKind::Vanilla, 10, 1);
    CHECK(a.e2e_prob != b.e2e_prob);
}

TEST_CASE("aggregation is the arithmetic of the ok rows", "[experiment]") {
    std::vector<RepetitionRow> rows(3);
    rows[0].e2e_prob = 0.4;
    rows[0].train_ms = 10.0;
    rows[0].status = "ok";
    rows[1].e2e_prob = 0.6;
    rows[1].train_ms = 30.0;
    rows[1].status = "ok";
    rows[2].e2e_prob = std::numeric_limits<double>::quiet_NaN();
    rows[2].status = "training_error";
    const AggregateRow agg = detail::aggregate_rows(MethodKind::Mol, 50, rows);
    CHECK(agg.method == MethodKind::Mol);
    CHECK(agg.sample_size == 50);
    CHECK(agg.n_ok == 2);
    CHECK(agg.n_fail == 1);
    CHECK_THAT(agg.mean_prob, Catch::Matchers::WithinAbs(0.5, 1e-15));
    CHECK_THAT(agg.sd_prob, Catch::Matchers::WithinAbs(std::sqrt(0.02), 1e-12));
    CHECK_THAT(agg.mean_train_ms, Catch::Matchers::WithinAbs(20.0, 1e-12));
}

TEST_CASE("a single repetition aggregates to zero spread", "[experiment]") {
    ExperimentConfig cfg = small_config();
    cfg.repetitions = 1;
    cfg.methods = {MethodKind::Vanilla};
    const ExperimentReport report = run_experiment(cfg);
    REQUIRE(report.raw.size() == 1);
    REQUIRE(report.aggregates.size() == 1);
    CHECK(report.aggregates[0].sd_prob == 0.0);
    CHECK(report.aggregates[0].mean_prob == report.raw[0].e2e_prob);
    CHECK(report.aggregates[0].n_ok == 1);
}

TEST_CASE("the sweep covers methods x sizes x repetitions", "[experiment]") {
    const ExperimentConfig cfg = small_config();
    std::ostringstream progress;
    const ExperimentReport report = run_experiment(cfg, &progress);
    REQUIRE(report.raw.size() == 4);
    REQUIRE(report.aggregates.size() == 2);

    double mean = 0.0;
    for (std::size_t i = 0; i < 2; ++i) mean += report.raw[i].e2e_prob;
    mean /= 2.0;
    CHECK_THAT(report.aggregates[0].mean_prob, Catch::Matchers::WithinAbs(mean, 1e-12));

    CHECK(report.optimum.probability > 0.3);
    CHECK(report.optimum.probability < 0.9);
    CHECK(progress.str().find("progress method=vanilla K=10 rep=1/2 status=ok") !=
          std::string::npos);
    CHECK(progress.str().find("progress method=cse K=10 rep=2/2") != std::string::npos);
}

TEST_CASE("failed repetitions are recorded, not fatal", "[experiment]") {
    ExperimentConfig cfg = small_config();
    cfg.methods = {MethodKind::Po};
    cfg.repetitions = 1;
    cfg.train.po.max_iters = 1;
    const ExperimentReport report = run_experiment(cfg);
    REQUIRE(report.raw.size() == 1);
    CHECK(report.raw[0].status == "convergence_error");
    CHECK(std::isnan(report.raw[0].e2e_prob));
    CHECK(std::isnan(report.raw[0].objective));
    CHECK(report.aggregates[0].n_ok == 0);
    CHECK(report.aggregates[0].n_fail == 1);
    CHECK(report.aggregates[0].mean_prob == 0.0);
}

TEST_CASE("a monotone model at K=200 lands near the optimum", "[experiment][slow]") {
    ExperimentConfig cfg = default_experiment_config();
    const RepetitionRow row = run_repetition(cfg, MethodKind::Awet, 200, 0);
    REQUIRE(row.status == "ok");

    std::vector<DomainGroundTruth> gts;
    for (const DomainSetup& d : cfg.domains) gts.push_back(d.gt);
    const OptimalDecomposition opt = optimal_decomposition(gts, cfg.e2e, 201);
    CHECK(opt.probability > 0.3);
    CHECK(opt.probability < 0.9);
    CHECK(row.e2e_prob >= opt.probability - 0.2);
    CHECK(row.e2e_prob <= opt.probability + 1e-3);
}

TEST_CASE("the CSV writers emit the documented schemas", "[experiment]") {
    std::vector<RepetitionRow> raw(1);
    raw[0].method = MethodKind::Awet;
    raw[0].sample_size = 50;
    raw[0].rep = 3;
    raw[0].e2e_prob = 0.5;
    raw[0].objective = 1.25;
    raw[0].train_ms = 12.5;
    raw[0].status = "ok";
    std::ostringstream raw_out;
    write_raw_csv(raw_out, raw);
    CHECK(raw_out.str() == "method,K,rep,e2e_prob,objective,train_ms,status\n"
                           "awet,50,3,0.5,1.25,12.5,ok\n");

    std::vector<AggregateRow> aggs(1);
    aggs[0].method = MethodKind::Po;
    aggs[0].sample_size = 100;
    aggs[0].mean_prob = 0.5;
    aggs[0].sd_prob = 0.125;
    aggs[0].mean_train_ms = 80.5;
    aggs[0].n_ok = 49;
    aggs[0].n_fail = 1;
    std::ostringstream agg_out;
    write_aggregates_csv(agg_out, aggs);
    CHECK(agg_out.str() == "method,K,mean_prob,sd_prob,n_ok,n_fail\n"
                           "po,100,0.5,0.125,49,1\n");

    std::ostringstream timing_out;
    write_timing_csv(timing_out, aggs);
    CHECK(timing_out.str() == "method,K,mean_train_ms\npo,100,80.5\n");

    OptimalDecomposition opt;
    opt.parts = {{40.0, 0.5}, {60.0, 0.5}};
    opt.probability = 0.5;
    std::ostringstream opt_out;
    write_optimum_csv(opt_out, opt);
    CHECK(opt_out.str() == "tau_1,tau_2,theta_1,theta_2,prob\n40,60,0.5,0.5,0.5\n");
}

TEST_CASE("report files land in the output directory", "[experiment]") {
    ExperimentConfig cfg = small_config();
    cfg.repetitions = 1;
    cfg.methods = {MethodKind::Vanilla};
    const ExperimentReport report = run_experiment(cfg);
    const auto dir = std::filesystem::temp_directory_path() / "slax_report_test";
    std::filesystem::remove_all(dir);
    write_report_files(report, dir.string());
    for (const char* name : {"raw.csv", "aggregates.csv", "timing.csv", "optimum.csv"})
        CHECK(std::filesystem::file_size(dir / name) > 10);
    std::filesystem::remove_all(dir);
}

TEST_CASE("aggregates are byte-identical across reruns", "[experiment]") {
    const ExperimentConfig cfg = small_config();
    const ExperimentReport a = run_experiment(cfg);
    const ExperimentReport b = run_experiment(cfg);
    std::ostringstream a_out, b_out;
    write_aggregates_csv(a_out, a.aggregates);
    write_aggregates_csv(b_out, b.aggregates);
    CHECK(a_out.str() == b_out.str());
    CHECK(a_out.str().find("vanilla,10,") != std::string::npos);
}

TEST_CASE("experiment config validation", "[experiment]") {
    ExperimentConfig cfg = small_config();
    cfg.sample_sizes = {4};
    CHECK_THROWS_AS(cfg.validate(), invalid_argument);
    cfg = small_config();
    cfg.domains.clear();
    CHECK_THROWS_AS(cfg.validate(), invalid_argument);
    cfg = small_config();
    cfg.repetitions = 0;
    CHECK_THROWS_AS(cfg.validate(), invalid_argument);
    cfg = small_config();
    cfg.methods.clear();
    CHECK_THROWS_AS(cfg.validate(), invalid_argument);
}
