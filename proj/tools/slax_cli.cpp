#include <cstdint>
#include <fstream>
#include <iostream>
#include <span>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slax/config.hpp"
#include "slax/contour.hpp"
#include "slax/model_io.hpp"

namespace {

slax::ExperimentConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return slax::default_experiment_config();
    return slax::load_experiment_config(path);
}

const slax::DomainSetup& domain_at(const slax::ExperimentConfig& cfg, int index) {
    if (index < 0 || static_cast<std::size_t>(index) >= cfg.domains.size())
        throw slax::invalid_argument("domain index " + std::to_string(index) +
                                     " out of range, config has " +
                                     std::to_string(cfg.domains.size()) + " domains");
    return cfg.domains[static_cast<std::size_t>(index)];
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw slax::io_error("cannot open for writing: " + path);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-domain SLA acceptance-risk models and E2E SLA decomposition"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "Sample a synthetic accept/reject dataset");
    std::string gen_config;
    int gen_domain = 0;
    int gen_samples = 100;
    std::uint64_t gen_seed = 1;
    std::string gen_out = "-";
    gen->add_option("--config", gen_config, "JSON configuration file");
    gen->add_option("--domain", gen_domain, "domain index into the configuration");
    gen->add_option("--samples", gen_samples, "number of observations to draw");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--out", gen_out, "output CSV path, - for stdout");

    auto* tr = app.add_subcommand("train", "Fit an acceptance-risk model to a dataset");
    std::string tr_config, tr_data, tr_method, tr_out, tr_epoch_log;
    int tr_domain = 0;
    std::uint64_t tr_seed = 0;
    tr->add_option("--data", tr_data, "input dataset CSV")->required();
    tr->add_option("--method", tr_method, "vanilla|regularised|awet|mol|cse|po|dp")->required();
    tr->add_option("--out", tr_out, "output model file")->required();
    tr->add_option("--config", tr_config, "JSON configuration file");
    tr->add_option("--domain", tr_domain, "domain index for the feature intervals");
    auto* tr_seed_opt = tr->add_option("--seed", tr_seed, "training RNG seed (default from config)");
    tr->add_option("--epoch-log", tr_epoch_log, "write per-epoch losses to this CSV");

    auto* dec = app.add_subcommand("decompose", "Split an E2E SLA across trained domain models");
    std::vector<std::string> dec_models;
    std::string dec_config, dec_out = "-";
    double dec_delay = 0.0, dec_throughput = 0.0;
    dec->add_option("--model", dec_models, "trained model file, repeat per domain")->required();
    dec->add_option("--config", dec_config, "JSON configuration file");
    auto* dec_delay_opt =
        dec->add_option("--delay", dec_delay, "E2E delay budget in ms (default from config)");
    auto* dec_thr_opt = dec->add_option("--throughput", dec_throughput,
                                        "E2E throughput floor in Gbps (default from config)");
    dec->add_option("--out", dec_out, "output CSV path, - for stdout");

    auto* exp = app.add_subcommand("experiment", "Run the full synthetic evaluation sweep");
    std::string exp_config, exp_out;
    std::uint64_t exp_seed = 0;
    int exp_reps = 0;
    std::vector<int> exp_samples;
    std::vector<std::string> exp_methods;
    bool exp_dry = false;
    exp->add_option("--config", exp_config, "JSON configuration file");
    exp->add_option("--out", exp_out, "output directory (overrides config)");
    auto* exp_seed_opt = exp->add_option("--seed", exp_seed, "base seed (overrides config)");
    auto* exp_reps_opt = exp->add_option("--reps", exp_reps, "repetitions per cell (overrides config)");
    exp->add_option("--samples", exp_samples, "sample sizes (overrides config)");
    exp->add_option("--method", exp_methods, "methods to run (overrides config)");
    exp->add_flag("--dry-run", exp_dry, "print the effective configuration and exit");

    auto* con = app.add_subcommand("contour", "Plot a model's acceptance-probability surface");
    std::string con_model, con_csv, con_svg, con_title = "acceptance probability";
    int con_res = 41;
    con->add_option("--model", con_model, "trained model file")->required();
    con->add_option("--csv", con_csv, "output grid CSV")->required();
    con->add_option("--svg", con_svg, "output SVG plot")->required();
    con->add_option("--resolution", con_res, "grid nodes per axis");
    con->add_option("--title", con_title, "plot title");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*gen) {
            const slax::ExperimentConfig cfg = load_config_or_default(gen_config);
            const slax::DomainSetup& domain = domain_at(cfg, gen_domain);
            slax::Rng rng(gen_seed);
            const slax::Dataset d =
                slax::generate_dataset(domain.gt, domain.spec, gen_samples, rng, gen_seed);
            if (gen_out == "-") {
                slax::write_dataset_csv(d, std::cout);
            } else {
                slax::save_dataset_csv(d, gen_out);
            }
            std::cerr << "generated domain=" << gen_domain << " samples=" << gen_samples
                      << " seed=" << gen_seed << '\n';
        } else if (*tr) {
            const slax::ExperimentConfig cfg = load_config_or_default(tr_config);
            const slax::MethodKind method = slax::method_from_name(tr_method);
            const slax::DomainSetup& domain = domain_at(cfg, tr_domain);
            const slax::Dataset d = slax::load_dataset_csv(tr_data, domain.spec);
            const std::uint64_t seed = tr_seed_opt->count() > 0 ? tr_seed : cfg.train.seed;
            slax::Rng rng(seed);
            std::vector<slax::EpochLogRow> log;
            const slax::RiskModel model =
                slax::train(d, method, cfg.train, rng, tr_epoch_log.empty() ? nullptr : &log);
            slax::save_model(model, tr_out);
            if (!tr_epoch_log.empty()) {
                std::ofstream log_out = open_output(tr_epoch_log);
                slax::write_epoch_log_csv(log_out, log);
            }
            std::cerr << "trained method=" << slax::method_name(method)
                      << " samples=" << d.size() << " epochs=" << model.epochs_run
                      << " val_bce=" << model.best_val_bce << " wall_ms=" << model.wall_ms
                      << " out=" << tr_out << '\n';
        } else if (*dec) {
            const slax::ExperimentConfig cfg = load_config_or_default(dec_config);
            std::vector<slax::RiskModel> models;
            models.reserve(dec_models.size());
            for (const std::string& path : dec_models) models.push_back(slax::load_model(path));
            slax::SloVector e2e = cfg.e2e;
            if (dec_delay_opt->count() > 0) e2e.delay_ms = dec_delay;
            if (dec_thr_opt->count() > 0) e2e.throughput_gbps = dec_throughput;
            const slax::DecompositionResult result =
                slax::decompose(std::span<const slax::RiskModel>(models), e2e, cfg.decompose);
            if (dec_out == "-") {
                slax::write_decomposition_csv(std::cout, result);
            } else {
                std::ofstream out = open_output(dec_out);
                slax::write_decomposition_csv(out, result);
            }
            std::cerr << "decomposed domains=" << models.size()
                      << " objective=" << result.objective
                      << " model_prob=" << result.model_e2e_prob
                      << " iterations=" << result.refine_iterations << '\n';
        } else if (*exp) {
            slax::ExperimentConfig cfg = load_config_or_default(exp_config);
            if (exp_seed_opt->count() > 0) cfg.base_seed = exp_seed;
            if (exp_reps_opt->count() > 0) cfg.repetitions = exp_reps;
            if (!exp_samples.empty()) cfg.sample_sizes = exp_samples;
            if (!exp_methods.empty()) {
                cfg.methods.clear();
                for (const std::string& name : exp_methods)
                    cfg.methods.push_back(slax::method_from_name(name));
            }
            if (!exp_out.empty()) cfg.output_dir = exp_out;
            cfg.validate();
            if (exp_dry) {
                slax::save_experiment_config(cfg, std::cout);
                return 0;
            }
            const slax::ExperimentReport report = slax::run_experiment(cfg, &std::cerr);
            slax::write_report_files(report, cfg.output_dir);
            std::cerr << "experiment rows=" << report.raw.size()
                      << " optimum_prob=" << report.optimum.probability
                      << " dir=" << cfg.output_dir << '\n';
        } else if (*con) {
            const slax::RiskModel model = slax::load_model(con_model);
            slax::export_contour(model, model.spec, con_res, con_csv, con_svg, con_title);
            std::cerr << "contour method=" << slax::method_name(model.method)
                      << " resolution=" << con_res << " csv=" << con_csv << " svg=" << con_svg
                      << '\n';
        }
    } catch (const slax::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
