#pragma once

#include <fstream>
#include <initializer_list>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "slax/error.hpp"
#include "slax/experiment.hpp"

namespace slax {

namespace detail {

inline void check_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                       const char* where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw invalid_argument("config: unknown key '" + it.key() + "' in " + where);
    }
}

inline DomainSetup parse_domain(const nlohmann::json& j) {
    check_keys(j,
               {"a_delay", "b_thr", "c_off", "delay_lo_ms", "delay_hi_ms", "throughput_lo_gbps",
                "throughput_hi_gbps"},
               "domains[]");
    DomainSetup d;
    d.gt.a_delay = j.value("a_delay", d.gt.a_delay);
    d.gt.b_thr = j.value("b_thr", d.gt.b_thr);
    d.gt.c_off = j.value("c_off", d.gt.c_off);
    d.spec.delay_lo_ms = j.value("delay_lo_ms", d.spec.delay_lo_ms);
    d.spec.delay_hi_ms = j.value("delay_hi_ms", d.spec.delay_hi_ms);
    d.spec.throughput_lo_gbps = j.value("throughput_lo_gbps", d.spec.throughput_lo_gbps);
    d.spec.throughput_hi_gbps = j.value("throughput_hi_gbps", d.spec.throughput_hi_gbps);
    return d;
}

} // namespace detail

// Reads the experiment configuration. Every key is optional and falls back
// to the frozen defaults, so a config file only states what it changes.
inline ExperimentConfig parse_experiment_config(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig cfg = default_experiment_config();
    try {
        detail::check_keys(j, {"experiment", "domains", "train", "decompose"}, "config root");
        if (j.contains("experiment")) {
            const auto& e = j["experiment"];
            detail::check_keys(e,
                               {"base_seed", "repetitions", "sample_sizes", "methods",
                                "output_dir", "e2e_delay_ms", "e2e_throughput_gbps",
                                "optimum_grid_resolution"},
                               "experiment");
            cfg.base_seed = e.value("base_seed", cfg.base_seed);
            cfg.repetitions = e.value("repetitions", cfg.repetitions);
            if (e.contains("sample_sizes"))
                cfg.sample_sizes = e["sample_sizes"].get<std::vector<int>>();
            if (e.contains("methods")) {
                cfg.methods.clear();
                for (const auto& name : e["methods"])
                    cfg.methods.push_back(method_from_name(name.get<std::string>()));
            }
            cfg.output_dir = e.value("output_dir", cfg.output_dir);
            cfg.e2e.delay_ms = e.value("e2e_delay_ms", cfg.e2e.delay_ms);
            cfg.e2e.throughput_gbps = e.value("e2e_throughput_gbps", cfg.e2e.throughput_gbps);
            cfg.optimum_grid_resolution =
                e.value("optimum_grid_resolution", cfg.optimum_grid_resolution);
        }
        if (j.contains("domains")) {
            cfg.domains.clear();
            for (const auto& d : j["domains"]) cfg.domains.push_back(detail::parse_domain(d));
        }
        if (j.contains("train")) {
            const auto& t = j["train"];
            detail::check_keys(t,
                               {"learning_rate", "batch_size", "val_fraction", "patience",
                                "max_epochs", "k_reg", "k_mol", "k_dp", "dp_points_per_step",
                                "eps_clip", "po_max_iters", "po_step_tol",
                                "po_inner_max_sweeps", "po_feasibility_tol", "po_change_tol"},
                               "train");
            TrainConfig& tc = cfg.train;
            tc.learning_rate = t.value("learning_rate", tc.learning_rate);
            tc.batch_size = t.value("batch_size", tc.batch_size);
            tc.val_fraction = t.value("val_fraction", tc.val_fraction);
            tc.patience = t.value("patience", tc.patience);
            tc.max_epochs = t.value("max_epochs", tc.max_epochs);
            tc.k_reg = t.value("k_reg", tc.k_reg);
            tc.k_mol = t.value("k_mol", tc.k_mol);
            tc.k_dp = t.value("k_dp", tc.k_dp);
            tc.dp_points_per_step = t.value("dp_points_per_step", tc.dp_points_per_step);
            tc.eps_clip = t.value("eps_clip", tc.eps_clip);
            tc.po.max_iters = t.value("po_max_iters", tc.po.max_iters);
            tc.po.step_tol = t.value("po_step_tol", tc.po.step_tol);
            tc.po.inner_max_sweeps = t.value("po_inner_max_sweeps", tc.po.inner_max_sweeps);
            tc.po.feasibility_tol = t.value("po_feasibility_tol", tc.po.feasibility_tol);
            tc.po.change_tol = t.value("po_change_tol", tc.po.change_tol);
            tc.po.eps_clip = tc.eps_clip;
        }
        if (j.contains("decompose")) {
            const auto& d = j["decompose"];
            detail::check_keys(d,
                               {"grid_resolution", "refine_max_iters", "refine_step_tol",
                                "constraint_tol", "joint_theta_grid", "theta_resolution"},
                               "decompose");
            DecomposeConfig& dc = cfg.decompose;
            dc.grid_resolution = d.value("grid_resolution", dc.grid_resolution);
            dc.refine_max_iters = d.value("refine_max_iters", dc.refine_max_iters);
            dc.refine_step_tol = d.value("refine_step_tol", dc.refine_step_tol);
            dc.constraint_tol = d.value("constraint_tol", dc.constraint_tol);
            dc.joint_theta_grid = d.value("joint_theta_grid", dc.joint_theta_grid);
            dc.theta_resolution = d.value("theta_resolution", dc.theta_resolution);
            dc.eps_clip = cfg.train.eps_clip;
        }
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("config field error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config: " + path);
    return parse_experiment_config(in);
}

// Echoes the effective configuration, loadable by parse_experiment_config.
inline void save_experiment_config(const ExperimentConfig& cfg, std::ostream& out) {
    nlohmann::json j;
    auto& e = j["experiment"];
    e["base_seed"] = cfg.base_seed;
    e["repetitions"] = cfg.repetitions;
    e["sample_sizes"] = cfg.sample_sizes;
    std::vector<std::string> names;
    for (MethodKind m : cfg.methods) names.emplace_back(method_name(m));
    e["methods"] = names;
    e["output_dir"] = cfg.output_dir;
    e["e2e_delay_ms"] = cfg.e2e.delay_ms;
    e["e2e_throughput_gbps"] = cfg.e2e.throughput_gbps;
    e["optimum_grid_resolution"] = cfg.optimum_grid_resolution;
    j["domains"] = nlohmann::json::array();
    for (const DomainSetup& d : cfg.domains)
        j["domains"].push_back({{"a_delay", d.gt.a_delay},
                                {"b_thr", d.gt.b_thr},
                                {"c_off", d.gt.c_off},
                                {"delay_lo_ms", d.spec.delay_lo_ms},
                                {"delay_hi_ms", d.spec.delay_hi_ms},
                                {"throughput_lo_gbps", d.spec.throughput_lo_gbps},
                                {"throughput_hi_gbps", d.spec.throughput_hi_gbps}});
    auto& t = j["train"];
    t["learning_rate"] = cfg.train.learning_rate;
    t["batch_size"] = cfg.train.batch_size;
    t["val_fraction"] = cfg.train.val_fraction;
    t["patience"] = cfg.train.patience;
    t["max_epochs"] = cfg.train.max_epochs;
    t["k_reg"] = cfg.train.k_reg;
    t["k_mol"] = cfg.train.k_mol;
    t["k_dp"] = cfg.train.k_dp;
    t["dp_points_per_step"] = cfg.train.dp_points_per_step;
    t["eps_clip"] = cfg.train.eps_clip;
    t["po_max_iters"] = cfg.train.po.max_iters;
    t["po_step_tol"] = cfg.train.po.step_tol;
    t["po_inner_max_sweeps"] = cfg.train.po.inner_max_sweeps;
    t["po_feasibility_tol"] = cfg.train.po.feasibility_tol;
    t["po_change_tol"] = cfg.train.po.change_tol;
    auto& d = j["decompose"];
    d["grid_resolution"] = cfg.decompose.grid_resolution;
    d["refine_max_iters"] = cfg.decompose.refine_max_iters;
    d["refine_step_tol"] = cfg.decompose.refine_step_tol;
    d["constraint_tol"] = cfg.decompose.constraint_tol;
    d["joint_theta_grid"] = cfg.decompose.joint_theta_grid;
    d["theta_resolution"] = cfg.decompose.theta_resolution;
    out << j.dump(2) << '\n';
}

} // namespace slax
