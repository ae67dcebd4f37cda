#pragma once

#include "enn/dataio.hpp"
#include "enn/parallel.hpp"
#include "enn/report.hpp"
#include "enn/selection.hpp"
#include "enn/serialize.hpp"
#include "enn/transfer.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace enn {

struct ExperimentConfig {
    std::vector<double> tau_levels{0.1, 0.25, 0.5, 0.75, 0.9};
    std::vector<double> lambda_grid{0.0, 0.1, 1.0, 10.0, 100.0};
    std::vector<int> hidden_grid{3, 5, 10};
    int replicates = 50;
    std::uint64_t master_seed = 0;
    /// Response for scratch-only runs; ignored when a transfer plan is set.
    std::string phenotype;
    std::optional<TransferPlan> transfer_plan;
    std::string output_dir;

    Activation hidden_activation = Activation::relu;
    Activation output_activation = Activation::identity;
    int max_epochs = 1000;
    double grad_tolerance = 1e-6;

    [[nodiscard]] const std::string& target_phenotype() const
    {
        return transfer_plan ? transfer_plan->target_phenotype : phenotype;
    }

    /// Settings shared by every fit at level `tau`; lambda, width and seed
    /// are filled in per fit.
    [[nodiscard]] EnnConfig base_config(double tau) const
    {
        EnnConfig c;
        c.tau = tau;
        c.hidden_activation = hidden_activation;
        c.output_activation = output_activation;
        c.max_epochs = max_epochs;
        c.grad_tolerance = grad_tolerance;
        return c;
    }

    void validate() const
    {
        if (tau_levels.empty()) throw Error(ErrorCategory::config, "tau_levels is empty");
        for (double t : tau_levels) {
            if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCategory::config, "tau levels must lie in (0,1)");
        }
        for (double l : lambda_grid) {
            if (!(l >= 0.0)) throw Error(ErrorCategory::config, "lambda grid values must be >= 0");
        }
        for (int h : hidden_grid) {
            if (h < 1) throw Error(ErrorCategory::config, "hidden grid values must be >= 1");
        }
        (void)ordered_grid(lambda_grid, hidden_grid);
        if (replicates < 1) throw Error(ErrorCategory::config, "replicates must be >= 1");
        if (!transfer_plan && phenotype.empty()) {
            throw Error(ErrorCategory::config, "set 'phenotype' or a 'transfer' plan");
        }
        base_config(tau_levels.front()).validate();
    }

    [[nodiscard]] static ExperimentConfig from_json(const nlohmann::json& j)
    {
        try {
            ExperimentConfig c;
            if (j.contains("tau_levels")) c.tau_levels = j.at("tau_levels").get<std::vector<double>>();
            if (j.contains("lambda_grid")) c.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
            if (j.contains("hidden_grid")) c.hidden_grid = j.at("hidden_grid").get<std::vector<int>>();
            c.replicates = j.value("replicates", c.replicates);
            c.master_seed = j.value("master_seed", c.master_seed);
            c.phenotype = j.value("phenotype", c.phenotype);
            c.output_dir = j.value("output_dir", c.output_dir);
            if (j.contains("hidden_activation")) {
                c.hidden_activation = parse_activation(j.at("hidden_activation").get<std::string>());
            }
            if (j.contains("output_activation")) {
                c.output_activation = parse_activation(j.at("output_activation").get<std::string>());
            }
            c.max_epochs = j.value("max_epochs", c.max_epochs);
            c.grad_tolerance = j.value("grad_tolerance", c.grad_tolerance);
            if (j.contains("transfer")) {
                const auto& t = j.at("transfer");
                TransferPlan plan;
                plan.source_phenotype = t.at("source_phenotype").get<std::string>();
                plan.target_phenotype = t.at("target_phenotype").get<std::string>();
                plan.freeze = parse_freeze(t.value("freeze", std::string("w1b1")));
                plan.reuse_as_warm_start = t.value("warm_start", true);
                c.transfer_plan = plan;
            }
            c.validate();
            return c;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCategory::config, std::string("malformed experiment config: ") + e.what());
        }
    }
};

/// Data of one replicate after splitting and train-only standardization.
struct ReplicateData {
    int replicate = 0;
    Split split;
    Scaler scaler;
    DataMatrix X_train, X_valid, X_test;
    /// Seed of the scratch initialization; shared with unfrozen transfer blocks.
    std::uint64_t init_seed = 0;
    std::uint64_t source_seed = 0;

    [[nodiscard]] static ReplicateData prepare(const Dataset& ds, const SplitSpec& spec, int replicate)
    {
        ReplicateData r;
        r.replicate = replicate;
        r.split = enn::split(ds, spec, replicate);
        auto [scaled, scaler] = standardize_covariates(ds, r.split.train);
        r.scaler = std::move(scaler);
        r.X_train = select_rows(scaled.X, r.split.train);
        r.X_valid = select_rows(scaled.X, r.split.valid);
        r.X_test = select_rows(scaled.X, r.split.test);
        const auto rep = static_cast<std::uint64_t>(replicate);
        r.init_seed = derive_seed(spec.master_seed, {stream::init, rep});
        r.source_seed = derive_seed(spec.master_seed, {stream::source_init, rep});
        return r;
    }
};

/// Winning (lambda, hidden) pair for `phenotype` at level `tau`, chosen on the
/// validation rows of `split` after training on its training rows.
[[nodiscard]] inline GridPoint select_hyperparams(const ExperimentConfig& cfg, const Dataset& ds,
                                                  const Split& split, double tau,
                                                  const std::string& phenotype,
                                                  std::uint64_t init_seed = 0)
{
    auto [scaled, scaler] = standardize_covariates(ds, split.train);
    const Vector& y = ds.phenotype(phenotype);
    EnnConfig base = cfg.base_config(tau);
    base.seed = init_seed;
    return select_scratch(ordered_grid(cfg.lambda_grid, cfg.hidden_grid), base,
                          select_rows(scaled.X, split.train), select_rows(y, split.train),
                          select_rows(scaled.X, split.valid), select_rows(y, split.valid))
        .point;
}

struct ArmModels {
    double tau = 0.5;
    SavedModel scratch;
    std::optional<SavedModel> transfer;
};

struct ReplicateOutcome {
    std::vector<ReplicateRow> rows;
    std::vector<ArmModels> models;
};

namespace detail {

template <typename Fn>
auto with_context(double tau, const char* arm, Fn&& fn)
{
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.category(), "tau " + format_g6(tau) + ", arm " + arm + ": " + e.what());
    }
}

inline ArmOutcome outcome(const Selection& sel, const EnnConfig& cfg, const DataMatrix& X_train,
                          const Vector& y_train, const DataMatrix& X_test, const Vector& y_test)
{
    ArmOutcome a;
    a.chosen = sel.point;
    a.train_mse = mse(y_train, forward_batch(sel.fit.params, cfg, X_train));
    a.test_mse = mse(y_test, forward_batch(sel.fit.params, cfg, X_test));
    a.iterations = sel.fit.report.iterations;
    a.termination = sel.fit.report.termination;
    return a;
}

inline SavedModel saved(const Selection& sel, EnnConfig cfg, const ReplicateData& rd,
                        const std::string& role)
{
    cfg.lambda = sel.point.lambda;
    cfg.hidden_units = static_cast<int>(sel.fit.params.q());
    return {sel.fit.params, cfg,
            nlohmann::json{{"role", role},
                           {"replicate", rd.replicate},
                           {"valid_mse", sel.valid_mse},
                           {"iterations", sel.fit.report.iterations},
                           {"termination", std::string(to_string(sel.fit.report.termination))},
                           {"scaler", rd.scaler.to_json()}}};
}

/// Both arms for every tau level on one replicate.
inline ReplicateOutcome run_replicate(const ExperimentConfig& cfg, const Dataset& ds,
                                      const SplitSpec& spec, int replicate)
{
    const ReplicateData rd = ReplicateData::prepare(ds, spec, replicate);
    const auto grid = ordered_grid(cfg.lambda_grid, cfg.hidden_grid);
    const Vector& y_all = ds.phenotype(cfg.target_phenotype());
    const Vector y_train = select_rows(y_all, rd.split.train);
    const Vector y_valid = select_rows(y_all, rd.split.valid);
    const Vector y_test = select_rows(y_all, rd.split.test);

    ReplicateOutcome out;
    for (double tau : cfg.tau_levels) {
        EnnConfig base = cfg.base_config(tau);
        base.seed = rd.init_seed;
        ReplicateRow row;
        row.replicate = replicate;
        row.tau = tau;

        const Selection scratch = with_context(tau, "ENN", [&] {
            return select_scratch(grid, base, rd.X_train, y_train, rd.X_valid, y_valid);
        });
        row.scratch = outcome(scratch, base, rd.X_train, y_train, rd.X_test, y_test);
        ArmModels models{tau, saved(scratch, base, rd, "ENN"), std::nullopt};

        if (cfg.transfer_plan) {
            const TransferPlan& plan = *cfg.transfer_plan;
            const Vector& ys_all = ds.phenotype(plan.source_phenotype);
            EnnConfig source_base = base;
            source_base.seed = rd.source_seed;
            const Selection source = with_context(tau, "source", [&] {
                return select_scratch(grid, source_base, rd.X_train,
                                      select_rows(ys_all, rd.split.train), rd.X_valid,
                                      select_rows(ys_all, rd.split.valid));
            });

            // A plan that carries nothing over searches the full grid, exactly
            // like the scratch arm; otherwise the width is the source's.
            const auto tf_grid = plan.reduces_to_scratch()
                                     ? grid
                                     : ordered_grid(cfg.lambda_grid, {source.point.hidden});
            const Selection transfer = with_context(tau, "ENN.TF", [&] {
                return select_on_validation(
                    tf_grid, base,
                    [&](const EnnConfig& c) {
                        if (plan.reduces_to_scratch()) {
                            return minimize(init_params(rd.X_train.cols(), c.hidden_units, c.seed),
                                            c, rd.X_train, y_train);
                        }
                        return transfer_fit(source.fit.params, plan, c, rd.X_train, y_train);
                    },
                    rd.X_valid, y_valid);
            });
            row.transfer = outcome(transfer, base, rd.X_train, y_train, rd.X_test, y_test);
            models.transfer = saved(transfer, base, rd, "ENN.TF");
        }
        out.rows.push_back(row);
        out.models.push_back(std::move(models));
    }
    return out;
}

} // namespace detail

struct ExperimentResult {
    ExperimentReport report;
    /// Fitted models of replicate 0, one entry per tau level.
    std::vector<ArmModels> first_replicate_models;
};

/// Full protocol: per replicate a fresh 3:1:1 split, train-only
/// standardization, grid search on validation rows and test-set MSE for the
/// scratch arm and, with a transfer plan, the transfer arm. Replicates run in
/// parallel and are merged in order, so results depend only on the inputs.
[[nodiscard]] inline ExperimentResult run_experiment_full(const ExperimentConfig& cfg,
                                                          const Dataset& ds)
{
    cfg.validate();
    (void)ds.phenotype(cfg.target_phenotype());
    if (cfg.transfer_plan) cfg.transfer_plan->validate(ds);
    const SplitSpec spec{cfg.replicates, cfg.master_seed};

    auto outcomes = parallel_map<ReplicateOutcome>(
        static_cast<std::size_t>(cfg.replicates), [&](std::size_t r) {
            try {
                return detail::run_replicate(cfg, ds, spec, static_cast<int>(r));
            } catch (const Error& e) {
                throw Error(e.category(), "replicate " + std::to_string(r) + ": " + e.what());
            }
        });

    ExperimentResult result;
    result.report.tau_levels = cfg.tau_levels;
    result.report.has_transfer = cfg.transfer_plan.has_value();
    for (auto& o : outcomes) {
        result.report.rows.insert(result.report.rows.end(), o.rows.begin(), o.rows.end());
    }
    result.first_replicate_models = std::move(outcomes.front().models);
    return result;
}

[[nodiscard]] inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const Dataset& ds)
{
    return run_experiment_full(cfg, ds).report;
}

/// Paired comparison of transfer and scratch arms over `replicates` splits.
[[nodiscard]] inline ExperimentReport compare_transfer(ExperimentConfig cfg, const TransferPlan& plan,
                                                       const Dataset& ds, const SplitSpec& split_spec,
                                                       int replicates)
{
    cfg.transfer_plan = plan;
    cfg.master_seed = split_spec.master_seed;
    cfg.replicates = replicates;
    return run_experiment(cfg, ds);
}

} // namespace enn
