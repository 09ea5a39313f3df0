#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "slax/cse.hpp"
#include "slax/dataset.hpp"
#include "slax/error.hpp"
#include "slax/losses.hpp"
#include "slax/mlp.hpp"
#include "slax/po.hpp"
#include "slax/rng.hpp"
#include "slax/slo.hpp"

namespace slax {

enum class MethodKind { Vanilla, Regularised, Awet, Mol, Cse, Po, Dp };

inline constexpr std::array<MethodKind, 7> kAllMethods{
    MethodKind::Vanilla, MethodKind::Regularised, MethodKind::Awet, MethodKind::Mol,
    MethodKind::Cse,     MethodKind::Po,          MethodKind::Dp};

inline const char* method_name(MethodKind m) {
    switch (m) {
    case MethodKind::Vanilla: return "vanilla";
    case MethodKind::Regularised: return "regularised";
    case MethodKind::Awet: return "awet";
    case MethodKind::Mol: return "mol";
    case MethodKind::Cse: return "cse";
    case MethodKind::Po: return "po";
    case MethodKind::Dp: return "dp";
    }
    throw invalid_argument("method_name: unknown method");
}

inline MethodKind method_from_name(std::string_view name) {
    for (MethodKind m : kAllMethods)
        if (name == method_name(m)) return m;
    throw invalid_argument("unknown method name: " + std::string(name));
}

struct TrainConfig {
    double learning_rate = 0.01;
    int batch_size = 16;
    double val_fraction = 0.2;
    int patience = 100;
    int max_epochs = 5000;
    double k_reg = 0.1;
    double k_mol = 1.0;
    double k_dp = 1.0;
    int dp_points_per_step = 4;
    double eps_clip = 1e-7;
    std::uint64_t seed = 1;
    PoOptions po;

    void validate() const {
        if (!(learning_rate > 0.0)) throw invalid_argument("TrainConfig: learning_rate must be > 0");
        if (batch_size < 2) throw invalid_argument("TrainConfig: batch_size must be >= 2");
        if (!(val_fraction > 0.0) || !(val_fraction < 1.0))
            throw invalid_argument("TrainConfig: val_fraction must be in (0,1)");
        if (patience < 1) throw invalid_argument("TrainConfig: patience must be >= 1");
        if (max_epochs < 1) throw invalid_argument("TrainConfig: max_epochs must be >= 1");
        if (!(k_reg > 0.0)) throw invalid_argument("TrainConfig: k_reg must be > 0");
        if (!(k_mol > 0.0)) throw invalid_argument("TrainConfig: k_mol must be > 0");
        if (!(k_dp > 0.0)) throw invalid_argument("TrainConfig: k_dp must be > 0");
        if (dp_points_per_step < 1)
            throw invalid_argument("TrainConfig: dp_points_per_step must be >= 1");
        if (!(eps_clip > 0.0) || !(eps_clip <= 0.01))
            throw invalid_argument("TrainConfig: eps_clip must be in (0, 0.01]");
        po.validate();
    }
};

// Frozen trained model. Inference always uses running BN statistics, so it
// is deterministic and safe to share across threads.
struct RiskModel {
    Mlp mlp;
    FeatureSpec spec;
    MethodKind method = MethodKind::Vanilla;
    std::uint32_t epochs_run = 0;
    double best_val_bce = 0.0;
    double wall_ms = 0.0;

    double probability(const SloVector& s) const {
        return mlp.forward_inference(orient_features(s, spec));
    }

    // dP/d(delay) in probability per ms, via the chain rule through the
    // oriented-feature map.
    double delay_gradient(const SloVector& s) const {
        const auto g = input_gradient_inference(mlp, orient_features(s, spec));
        return g[0] / (spec.delay_hi_ms - spec.delay_lo_ms);
    }
};

// Equality of everything that affects inference and reproducibility checks.
// Wall time is excluded: it is measurement metadata, not model state.
inline bool models_functionally_equal(const RiskModel& a, const RiskModel& b) {
    if (a.method != b.method || a.epochs_run != b.epochs_run) return false;
    if (a.best_val_bce != b.best_val_bce) return false;
    if (a.spec.delay_lo_ms != b.spec.delay_lo_ms || a.spec.delay_hi_ms != b.spec.delay_hi_ms)
        return false;
    if (a.spec.throughput_lo_gbps != b.spec.throughput_lo_gbps ||
        a.spec.throughput_hi_gbps != b.spec.throughput_hi_gbps)
        return false;
    if (a.mlp.awet_mode != b.mlp.awet_mode) return false;
    for (std::size_t l = 0; l < a.mlp.layers.size(); ++l)
        if (a.mlp.layers[l].w != b.mlp.layers[l].w || a.mlp.layers[l].b != b.mlp.layers[l].b)
            return false;
    for (std::size_t l = 0; l < a.mlp.bn.size(); ++l)
        if (a.mlp.bn[l].mean != b.mlp.bn[l].mean || a.mlp.bn[l].var != b.mlp.bn[l].var)
            return false;
    return true;
}

// Adaptive per-parameter moment estimates (decay 0.9 / 0.999, eps 1e-8).
struct MomentOptimizer {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    MlpGradients m1;
    MlpGradients m2;
    long t = 0;

    explicit MomentOptimizer(const Mlp& net) : m1(net), m2(net) {
        m1.zero();
        m2.zero();
    }

    void step(Mlp& net, const MlpGradients& g, double lr) {
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            update(net.layers[l].w, g.w[l], m1.w[l], m2.w[l], lr, c1, c2);
            update(net.layers[l].b, g.b[l], m1.b[l], m2.b[l], lr, c1, c2);
        }
    }

  private:
    void update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& mom1,
                std::vector<double>& mom2, double lr, double c1, double c2) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            mom1[i] = beta1 * mom1[i] + (1.0 - beta1) * g[i];
            mom2[i] = beta2 * mom2[i] + (1.0 - beta2) * g[i] * g[i];
            p[i] -= lr * (mom1[i] / c1) / (std::sqrt(mom2[i] / c2) + eps);
        }
    }
};

struct EpochLogRow {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double wall_ms = 0.0;
};

inline void write_epoch_log_csv(std::ostream& out, std::span<const EpochLogRow> rows) {
    out << "epoch,train_loss,val_loss,wall_ms\n";
    for (const EpochLogRow& r : rows)
        out << r.epoch << ',' << detail::format_double(r.train_loss) << ','
            << detail::format_double(r.val_loss) << ',' << detail::format_double(r.wall_ms)
            << '\n';
}

// Mini-batch training with early stopping on validation BCE. RNG draws
// happen in a fixed order (weight init, split shuffle, then per epoch the
// batch shuffle and any derivative-penalty points), so a given seed yields
// a bit-identical model.
inline RiskModel train(const Dataset& d, MethodKind method, const TrainConfig& cfg, Rng& rng,
                       std::vector<EpochLogRow>* epoch_log = nullptr) {
    cfg.validate();
    d.spec.validate();
    if (d.size() < 5) throw invalid_argument("train: need at least 5 samples");
    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed_ms = [&t0] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    };

    const Dataset* data = &d;
    Dataset preprocessed;
    if (method == MethodKind::Cse) {
        preprocessed = cse_filter(d);
        data = &preprocessed;
    } else if (method == MethodKind::Po) {
        preprocessed = po_labels(d, cfg.po);
        data = &preprocessed;
    }
    const std::size_t n = data->size();
    for (const Sample& s : data->samples)
        if (!(s.y >= 0.0 && s.y <= 1.0)) throw invalid_argument("train: label outside [0,1]");

    std::vector<std::array<double, 2>> features(n);
    std::vector<double> labels(n);
    std::vector<SloVector> inputs(n);
    for (std::size_t i = 0; i < n; ++i) {
        features[i] = orient_features(data->samples[i].x, data->spec);
        labels[i] = data->samples[i].y;
        inputs[i] = data->samples[i].x;
    }

    Mlp net = Mlp::init(rng, method == MethodKind::Awet);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    std::size_t val_count = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * cfg.val_fraction));
    val_count = std::clamp<std::size_t>(val_count, 1, n >= 3 ? n - 2 : 1);
    const std::size_t train_count = n - val_count;
    if (train_count < 2) throw training_error("train: too few samples after preprocessing");
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<long>(train_count));
    std::vector<std::size_t> val_idx(order.begin() + static_cast<long>(train_count), order.end());

    MomentOptimizer opt(net);
    MlpGradients grads(net);
    BatchCache cache;
    std::vector<std::array<double, 2>> batch_x;
    std::vector<double> batch_y;
    std::vector<SloVector> batch_s;
    std::vector<double> dpred;
    std::vector<double> val_preds(val_idx.size());
    std::vector<double> val_labels(val_idx.size());
    for (std::size_t i = 0; i < val_idx.size(); ++i) val_labels[i] = labels[val_idx[i]];

    double best_val = std::numeric_limits<double>::infinity();
    int epochs_since_best = 0;
    int epochs_run = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        epochs_run = epoch;
        rng.shuffle(train_idx);
        double loss_acc = 0.0;
        std::size_t sample_acc = 0;
        for (std::size_t start = 0; start < train_count;
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(train_count, start + static_cast<std::size_t>(cfg.batch_size));
            const std::size_t m = stop - start;
            if (m < 2) break;
            batch_x.resize(m);
            batch_y.resize(m);
            batch_s.resize(m);
            for (std::size_t i = 0; i < m; ++i) {
                const std::size_t idx = train_idx[start + i];
                batch_x[i] = features[idx];
                batch_y[i] = labels[idx];
                batch_s[i] = inputs[idx];
            }

            forward_train(net, batch_x, cache, true);
            double batch_loss = bce_loss(cache.preds, batch_y, cfg.eps_clip);
            dpred.assign(m, 0.0);
            add_bce_gradient(cache.preds, batch_y, dpred);
            if (method == MethodKind::Mol) {
                batch_loss += cfg.k_mol * mol_loss(batch_s, cache.preds);
                add_mol_gradient(batch_s, cache.preds, cfg.k_mol, dpred);
            }
            grads.zero();
            backward_train(net, cache, dpred, grads);
            if (method == MethodKind::Regularised) {
                batch_loss += cfg.k_reg * reg_loss(net);
                add_reg_gradient(net, cfg.k_reg, grads);
            }
            if (method == MethodKind::Dp) {
                const auto points = sample_oriented_points(cfg.dp_points_per_step, rng);
                batch_loss += cfg.k_dp * dp_penalty_with_gradient(net, points, cfg.k_dp, grads);
            }
            if (!std::isfinite(batch_loss)) throw training_error("train: non-finite batch loss");
            opt.step(net, grads, cfg.learning_rate);
            loss_acc += batch_loss * static_cast<double>(m);
            sample_acc += m;
        }

        for (std::size_t i = 0; i < val_idx.size(); ++i)
            val_preds[i] = net.forward_inference(features[val_idx[i]]);
        const double val_loss = bce_loss(val_preds, val_labels, cfg.eps_clip);
        if (!std::isfinite(val_loss)) throw training_error("train: non-finite validation loss");
        if (epoch_log)
            epoch_log->push_back({epoch,
                                  sample_acc ? loss_acc / static_cast<double>(sample_acc) : 0.0,
                                  val_loss, elapsed_ms()});

        if (val_loss < best_val) {
            best_val = val_loss;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (epochs_since_best >= cfg.patience) break;
        }
    }

    // Early stopping halts training; the returned model keeps the weights at
    // the stopping epoch. best_val_bce records the stopping rule's minimum.
    RiskModel model;
    model.mlp = std::move(net);
    model.spec = data->spec;
    model.method = method;
    model.epochs_run = static_cast<std::uint32_t>(epochs_run);
    model.best_val_bce = best_val;
    model.wall_ms = elapsed_ms();
    return model;
}

} // namespace slax
