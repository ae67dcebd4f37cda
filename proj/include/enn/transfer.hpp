#pragma once

#include "enn/dataio.hpp"
#include "enn/optimizer.hpp"

#include <string>

namespace enn {

/// How a source-task network seeds the target task.
struct TransferPlan {
    std::string source_phenotype;
    std::string target_phenotype;
    FreezeSpec freeze = FreezeSpec::input_layer();
    /// Copy every source block as the starting point. When false, only the
    /// frozen blocks come from the source and the rest are freshly initialized.
    bool reuse_as_warm_start = true;

    /// True when the target fit does not depend on the source model at all.
    [[nodiscard]] bool reduces_to_scratch() const noexcept
    {
        return !reuse_as_warm_start && freeze == FreezeSpec::none();
    }

    void validate(const Dataset& ds) const
    {
        if (source_phenotype == target_phenotype) {
            throw Error(ErrorCategory::config, "source and target phenotype must differ");
        }
        (void)ds.phenotype(source_phenotype);
        (void)ds.phenotype(target_phenotype);
    }
};

/// Scratch fit on the source phenotype from init_params(p, Q, cfg.seed).
[[nodiscard]] inline FitResult fit_source_full(const EnnConfig& cfg, const DataMatrix& X,
                                               const Vector& y_source)
{
    return minimize(init_params(X.cols(), cfg.hidden_units, cfg.seed), cfg, X, y_source);
}

[[nodiscard]] inline ModelParams fit_source(const EnnConfig& cfg, const DataMatrix& X,
                                            const Vector& y_source)
{
    return fit_source_full(cfg, X, y_source).params;
}

/// Starting point of the target fit.
[[nodiscard]] inline ModelParams transfer_start(const ModelParams& source, const TransferPlan& plan,
                                                std::uint64_t init_seed)
{
    if (plan.reuse_as_warm_start) {
        return source;
    }
    ModelParams start = init_params(source.p(), source.q(), init_seed);
    detail::restore_frozen(start, source, plan.freeze);
    return start;
}

/// Refits the target phenotype starting from the source network. The hidden
/// width follows the source model; cfg.hidden_units is ignored.
[[nodiscard]] inline FitResult transfer_fit(const ModelParams& source_params,
                                            const TransferPlan& plan, const EnnConfig& cfg,
                                            const DataMatrix& X, const Vector& y_target)
{
    source_params.validate();
    if (source_params.p() != X.cols()) {
        throw Error(ErrorCategory::dimension,
                    "source model has " + std::to_string(source_params.p()) +
                        " inputs but the target data has " + std::to_string(X.cols()) +
                        " covariates; source and target must share the covariate space");
    }
    EnnConfig target_cfg = cfg;
    target_cfg.hidden_units = static_cast<int>(source_params.q());
    return minimize_masked(transfer_start(source_params, plan, cfg.seed), target_cfg, X, y_target,
                           plan.freeze);
}

} // namespace enn
