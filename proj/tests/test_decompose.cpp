#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "slax/decompose.hpp"
#include "slax/train.hpp"

#include "support.hpp"

using namespace slax;

namespace {

struct ConstModel {
    double p = 0.5;
    FeatureSpec spec{};

    double probability(const SloVector&) const { return p; }
    double delay_gradient(const SloVector&) const { return 0.0; }
};

std::vector<GroundTruthModel> calibrated_models() {
    return {
        GroundTruthModel{{0.12, 3.0, -1.0}, FeatureSpec{}},
        GroundTruthModel{{0.18, 4.0, -1.2}, FeatureSpec{}},
        GroundTruthModel{{0.09, 2.5, -0.8}, FeatureSpec{}},
    };
}

const std::vector<RiskModel>& trained_models() {
    static const std::vector<RiskModel> models = [] {
        std::vector<RiskModel> out;
        TrainConfig cfg;
        cfg.max_epochs = 400;
        int domain = 0;
        for (const GroundTruthModel& m : calibrated_models()) {
            Rng gen(Rng::substream(7, {static_cast<std::uint64_t>(domain)}));
            const Dataset d = generate_dataset(m.gt, m.spec, 80, gen, 7);
            Rng rng(Rng::substream(8, {static_cast<std::uint64_t>(domain)}));
            out.push_back(train(d, MethodKind::Awet, cfg, rng));
            ++domain;
        }
        return out;
    }();
    return models;
}

} // namespace

TEST_CASE("the objective sums negative log probabilities", "[decompose]") {
    const std::vector<ConstModel> half(3, ConstModel{0.5, FeatureSpec{}});
    const std::vector<SloVector> parts(3, SloVector{30.0, 0.5});
    CHECK_THAT(decomposition_objective<ConstModel>(half, parts),
               Catch::Matchers::WithinAbs(3.0 * std::log(2.0), 1e-9));

    const std::vector<ConstModel> one{ConstModel{0.7, FeatureSpec{}}};
    const std::vector<SloVector> one_part{SloVector{100.0, 0.5}};
    CHECK_THAT(decomposition_objective<ConstModel>(one, one_part),
               Catch::Matchers::WithinAbs(-std::log(0.7), 1e-9));
}

TEST_CASE("the objective validates its inputs", "[decompose]") {
    const std::vector<ConstModel> models(2, ConstModel{});
    const std::vector<SloVector> parts(3, SloVector{10.0, 0.5});
    CHECK_THROWS_AS(decomposition_objective<ConstModel>(models, parts), invalid_argument);
    const std::vector<ConstModel> none;
    const std::vector<SloVector> no_parts;
    CHECK_THROWS_AS(decomposition_objective<ConstModel>(none, no_parts), invalid_argument);
}

TEST_CASE("delay splits are enumerated on the full simplex grid", "[decompose]") {
    std::vector<std::vector<double>> taus;
    detail::for_each_delay_composition(2, 11, 100.0, [&](std::span<const double> t) {
        taus.emplace_back(t.begin(), t.end());
    });
    REQUIRE(taus.size() == 11);
    for (std::size_t k = 0; k < taus.size(); ++k) {
        CHECK_THAT(taus[k][0], Catch::Matchers::WithinAbs(10.0 * static_cast<double>(k), 1e-9));
        CHECK_THAT(taus[k][1],
                   Catch::Matchers::WithinAbs(100.0 - 10.0 * static_cast<double>(k), 1e-9));
    }

    int count = 0;
    detail::for_each_delay_composition(3, 5, 80.0, [&](std::span<const double> t) {
        double sum = 0.0;
        for (double v : t) sum += v;
        CHECK_THAT(sum, Catch::Matchers::WithinAbs(80.0, 1e-9));
        ++count;
    });
    CHECK(count == 15);
}

TEST_CASE("simplex projection is exact on known cases", "[decompose]") {
    std::vector<double> a{2.0, 0.0};
    project_onto_scaled_simplex(a, 1.0);
    CHECK_THAT(a[0], Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(a[1], Catch::Matchers::WithinAbs(0.0, 1e-12));

    std::vector<double> b{0.6, 0.9};
    project_onto_scaled_simplex(b, 1.0);
    CHECK_THAT(b[0], Catch::Matchers::WithinAbs(0.35, 1e-12));
    CHECK_THAT(b[1], Catch::Matchers::WithinAbs(0.65, 1e-12));

    std::vector<double> feasible{30.0, 70.0};
    project_onto_scaled_simplex(feasible, 100.0);
    CHECK_THAT(feasible[0], Catch::Matchers::WithinAbs(30.0, 1e-12));
    CHECK_THAT(feasible[1], Catch::Matchers::WithinAbs(70.0, 1e-12));
}

TEST_CASE("simplex projection minimizes the distance to the simplex", "[decompose]") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(3);
        for (double& v : x) v = rng.uniform(-50.0, 150.0);
        std::vector<double> proj(x);
        project_onto_scaled_simplex(proj, 100.0);

        double sum = 0.0;
        for (double v : proj) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK_THAT(sum, Catch::Matchers::WithinAbs(100.0, 1e-9));

        std::vector<double> again(proj);
        project_onto_scaled_simplex(again, 100.0);
        for (std::size_t i = 0; i < proj.size(); ++i)
            CHECK_THAT(again[i], Catch::Matchers::WithinAbs(proj[i], 1e-12));

        double proj_dist = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            proj_dist += (proj[i] - x[i]) * (proj[i] - x[i]);
        for (int probe = 0; probe < 200; ++probe) {
            std::vector<double> w(3);
            double total = 0.0;
            for (double& v : w) {
                v = -std::log(1.0 - rng.next_double());
                total += v;
            }
            double dist = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                w[i] *= 100.0 / total;
                dist += (w[i] - x[i]) * (w[i] - x[i]);
            }
            CHECK(proj_dist <= dist + 1e-9);
        }
    }
}

TEST_CASE("simplex projection rejects bad inputs", "[decompose]") {
    std::vector<double> empty;
    CHECK_THROWS_AS(project_onto_scaled_simplex(empty, 1.0), invalid_argument);
    std::vector<double> x{1.0};
    CHECK_THROWS_AS(project_onto_scaled_simplex(x, -1.0), invalid_argument);
}

TEST_CASE("identical domains settle on the equal split", "[decompose]") {
    // With two identical domains the equal split is the optimum by symmetry
    // and convexity, and tau = 45 lies exactly on the default 21-point grid.
    const std::vector<GroundTruthModel> models(2,
                                               GroundTruthModel{{0.12, 3.0, -1.0}, FeatureSpec{}});
    const SloVector e2e{90.0, 0.5};
    const std::vector<SloVector> grid = exhaustive_search<GroundTruthModel>(models, e2e);
    const std::vector<SloVector> equal(2, SloVector{45.0, 0.5});
    CHECK_THAT(decomposition_objective<GroundTruthModel>(models, grid),
               Catch::Matchers::WithinAbs(
                   decomposition_objective<GroundTruthModel>(models, equal), 1e-12));
}

TEST_CASE("refinement never worsens the grid solution", "[decompose]") {
    const std::vector<GroundTruthModel> models = calibrated_models();
    const SloVector e2e{100.0, 0.5};
    const DecompositionResult r = decompose<GroundTruthModel>(models, e2e);
    CHECK(r.objective <= r.grid_objective + 1e-12);
    CHECK(r.refine_iterations >= 1);
    CHECK_THAT(r.model_e2e_prob, Catch::Matchers::WithinAbs(std::exp(-r.objective), 1e-12));
    CHECK(validate_decomposition(r.parts, e2e, 1e-6));
}

TEST_CASE("a symmetric problem keeps the equal split as a fixed point", "[decompose]") {
    const std::vector<GroundTruthModel> models(3,
                                               GroundTruthModel{{0.12, 3.0, -1.0}, FeatureSpec{}});
    const SloVector e2e{90.0, 0.5};
    const std::vector<SloVector> equal(3, SloVector{30.0, 0.5});
    const std::vector<SloVector> refined = refine<GroundTruthModel>(models, e2e, equal);
    for (const SloVector& s : refined) {
        CHECK_THAT(s.delay_ms, Catch::Matchers::WithinAbs(30.0, 1e-9));
        CHECK_THAT(s.throughput_gbps, Catch::Matchers::WithinAbs(0.5, 1e-12));
    }
}

TEST_CASE("the refined solution matches a much denser grid", "[decompose]") {
    const std::vector<GroundTruthModel> models = calibrated_models();
    const SloVector e2e{100.0, 0.5};
    const DecompositionResult coarse = decompose<GroundTruthModel>(models, e2e);

    DecomposeConfig dense;
    dense.grid_resolution = 201;
    const std::vector<SloVector> dense_parts =
        exhaustive_search<GroundTruthModel>(models, e2e, dense);
    const double dense_obj = decomposition_objective<GroundTruthModel>(models, dense_parts);
    CHECK(coarse.objective <= dense_obj + 1e-3);
}

TEST_CASE("the decomposition agrees with the sampling-model optimum", "[decompose]") {
    const std::vector<GroundTruthModel> models = calibrated_models();
    std::vector<DomainGroundTruth> gts;
    for (const GroundTruthModel& m : models) gts.push_back(m.gt);
    const SloVector e2e{100.0, 0.5};

    const DecompositionResult r = decompose<GroundTruthModel>(models, e2e);
    const OptimalDecomposition oracle = optimal_decomposition(gts, e2e, 201);
    CHECK_THAT(r.model_e2e_prob, Catch::Matchers::WithinAbs(oracle.probability, 1e-3));
}

TEST_CASE("a single domain receives the whole budget", "[decompose]") {
    const std::vector<GroundTruthModel> models{GroundTruthModel{{0.12, 3.0, -1.0}, FeatureSpec{}}};
    const SloVector e2e{100.0, 0.5};
    const DecompositionResult r = decompose<GroundTruthModel>(models, e2e);
    REQUIRE(r.parts.size() == 1);
    CHECK_THAT(r.parts[0].delay_ms, Catch::Matchers::WithinAbs(100.0, 1e-6));
    CHECK_THAT(r.parts[0].throughput_gbps, Catch::Matchers::WithinAbs(0.5, 1e-12));
    CHECK_THAT(r.model_e2e_prob,
               Catch::Matchers::WithinAbs(gt_probability(models[0].gt, e2e), 1e-6));
}

TEST_CASE("constant models decompose deterministically", "[decompose]") {
    const std::vector<ConstModel> models(3, ConstModel{0.5, FeatureSpec{}});
    const SloVector e2e{100.0, 0.5};
    const DecompositionResult a = decompose<ConstModel>(models, e2e);
    const DecompositionResult b = decompose<ConstModel>(models, e2e);
    REQUIRE(a.parts.size() == b.parts.size());
    for (std::size_t n = 0; n < a.parts.size(); ++n) {
        CHECK(a.parts[n].delay_ms == b.parts[n].delay_ms);
        CHECK(a.parts[n].throughput_gbps == b.parts[n].throughput_gbps);
    }
    CHECK(validate_decomposition(a.parts, e2e, 1e-6));
    CHECK_THAT(a.objective, Catch::Matchers::WithinAbs(3.0 * std::log(2.0), 1e-9));
}

TEST_CASE("refinement rejects an infeasible starting point", "[decompose]") {
    const std::vector<GroundTruthModel> models = calibrated_models();
    const SloVector e2e{100.0, 0.5};
    const std::vector<SloVector> short_budget(3, SloVector{30.0, 0.5});
    CHECK_THROWS_AS(refine<GroundTruthModel>(models, e2e, short_budget), invalid_argument);
}

TEST_CASE("decompose config validation", "[decompose]") {
    const std::vector<ConstModel> models(2, ConstModel{});
    const SloVector e2e{100.0, 0.5};
    DecomposeConfig bad;
    bad.grid_resolution = 1;
    CHECK_THROWS_AS(exhaustive_search<ConstModel>(models, e2e, bad), invalid_argument);
    DecomposeConfig bad_tol;
    bad_tol.refine_step_tol = 0.0;
    CHECK_THROWS_AS(decompose<ConstModel>(models, e2e, bad_tol), invalid_argument);
}

TEST_CASE("trained models decompose end to end", "[decompose][slow]") {
    const std::vector<RiskModel>& models = trained_models();
    const SloVector e2e{100.0, 0.5};
    const DecompositionResult r = decompose<RiskModel>(models, e2e);
    REQUIRE(r.parts.size() == 3);
    CHECK(validate_decomposition(r.parts, e2e, 1e-6));
    CHECK(r.model_e2e_prob > 0.0);
    CHECK(r.model_e2e_prob < 1.0);
    CHECK(std::isfinite(r.objective));
    CHECK(r.objective <= r.grid_objective + 1e-12);
}

TEST_CASE("loosening any single part never increases the objective", "[decompose][slow]") {
    const std::vector<RiskModel>& models = trained_models();
    const SloVector e2e{100.0, 0.5};
    const DecompositionResult r = decompose<RiskModel>(models, e2e);
    const double base = decomposition_objective<RiskModel>(models, r.parts);
    for (std::size_t n = 0; n < models.size(); ++n) {
        std::vector<SloVector> loosened = r.parts;
        loosened[n].delay_ms += 10.0;
        loosened[n].throughput_gbps = std::max(0.0, loosened[n].throughput_gbps - 0.1);
        REQUIRE(preceq(r.parts[n], loosened[n]));
        CHECK(decomposition_objective<RiskModel>(models, loosened) <= base + 1e-12);
    }
}

TEST_CASE("a decomposition is written as one CSV row", "[decompose]") {
    const std::vector<ConstModel> models(2, ConstModel{0.5, FeatureSpec{}});
    const SloVector e2e{100.0, 0.5};
    const DecompositionResult r = decompose<ConstModel>(models, e2e);
    std::ostringstream out;
    write_decomposition_csv(out, r);
    std::istringstream lines(out.str());
    std::string header;
    std::string row;
    std::string extra;
    REQUIRE(std::getline(lines, header));
    REQUIRE(std::getline(lines, row));
    CHECK_FALSE(std::getline(lines, extra));
    CHECK(header == "tau_1,tau_2,theta_1,theta_2,objective,model_prob");
    CHECK(row.find("0.5") != std::string::npos);
}
