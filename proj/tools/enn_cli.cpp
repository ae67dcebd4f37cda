// Command-line front end: fit, transfer, experiment, synth, curves, gradcheck.

#include "enn/enn.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace enn;

namespace {

int exit_code(ErrorCategory c)
{
    switch (c) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::dimension: return 3;
    case ErrorCategory::empty_dataset: return 4;
    case ErrorCategory::data: return 5;
    case ErrorCategory::io: return 6;
    case ErrorCategory::numerical: return 7;
    }
    return 1;
}

nlohmann::json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::io, "cannot read " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCategory::config, path + " is not valid JSON: " + e.what());
    }
}

void make_dirs(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCategory::io, "cannot create directory " + dir.string());
}

struct TrainOptions {
    double tau = 0.5;
    double lambda = 0.0;
    int hidden = 5;
    std::uint64_t seed = 0;
    int max_epochs = 1000;
    double grad_tolerance = 1e-6;
    std::string hidden_activation = "relu";
    std::string output_activation = "identity";

    void add_to(CLI::App& app)
    {
        app.add_option("--tau", tau, "expectile level in (0,1)")->capture_default_str();
        app.add_option("--lambda", lambda, "ridge penalty")->capture_default_str();
        app.add_option("--hidden", hidden, "hidden units")->capture_default_str();
        app.add_option("--seed", seed, "initialization seed")->capture_default_str();
        app.add_option("--max-epochs", max_epochs)->capture_default_str();
        app.add_option("--grad-tol", grad_tolerance)->capture_default_str();
        app.add_option("--hidden-activation", hidden_activation)->capture_default_str();
        app.add_option("--output-activation", output_activation)->capture_default_str();
    }

    [[nodiscard]] EnnConfig config() const
    {
        EnnConfig c;
        c.tau = tau;
        c.lambda = lambda;
        c.hidden_units = hidden;
        c.seed = seed;
        c.max_epochs = max_epochs;
        c.grad_tolerance = grad_tolerance;
        c.hidden_activation = parse_activation(hidden_activation);
        c.output_activation = parse_activation(output_activation);
        c.validate();
        return c;
    }
};

struct Loaded {
    Dataset raw;
    Dataset scaled;
    Scaler scaler;
};

Loaded load_standardized(const std::string& data, const std::string& schema)
{
    Loaded l;
    l.raw = load_csv(data, Schema::load(schema));
    for (const auto& w : l.raw.warnings) std::cerr << "warning: " << w << '\n';
    IndexList all(static_cast<std::size_t>(l.raw.n()));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    auto [scaled, scaler] = standardize_covariates(l.raw, all);
    l.scaled = std::move(scaled);
    l.scaler = std::move(scaler);
    return l;
}

// Standardized feature matrix together with what a saved model must record
// to rebuild it.
struct Features {
    DataMatrix X;
    nlohmann::json scaler = nlohmann::json::array();
    std::vector<std::string> names;
};

Features features_of(const Loaded& l)
{
    Features f{l.scaled.X, l.scaler.to_json(), {}};
    for (const auto& c : l.scaled.columns) f.names.push_back(c.name);
    return f;
}

nlohmann::json fit_meta(const std::string& role, const std::string& phenotype,
                        const FitResult& fit, const Features& f)
{
    return {{"role", role},
            {"phenotype", phenotype},
            {"iterations", fit.report.iterations},
            {"termination", std::string(to_string(fit.report.termination))},
            {"train_risk", fit.report.final_risk.total},
            {"features", f.names},
            {"scaler", f.scaler}};
}

void report_fit(const FitResult& fit, const EnnConfig& cfg, const DataMatrix& X, const Vector& y)
{
    std::cout << "iterations\t" << fit.report.iterations << '\n'
              << "termination\t" << to_string(fit.report.termination) << '\n'
              << "train_risk\t" << format_g6(fit.report.final_risk.total) << '\n'
              << "train_mse\t" << format_g6(mse(y, forward_batch(fit.params, cfg, X))) << '\n';
}

// Features of `ds` rebuilt with the scaler and column order a model recorded.
Features features_for(const SavedModel& m, const Dataset& ds)
{
    Features f;
    f.scaler = m.training_meta.value("scaler", nlohmann::json::array());
    DataMatrix X = ds.X;
    Scaler::from_json(f.scaler, ds).apply(X);
    if (!m.training_meta.contains("features")) {
        f.X = std::move(X);
        for (const auto& c : ds.columns) f.names.push_back(c.name);
        return f;
    }
    f.names = m.training_meta["features"].get<std::vector<std::string>>();
    f.X.resize(ds.n(), static_cast<Eigen::Index>(f.names.size()));
    for (std::size_t k = 0; k < f.names.size(); ++k) {
        auto it = std::find_if(ds.columns.begin(), ds.columns.end(),
                               [&](const ColumnMeta& c) { return c.name == f.names[k]; });
        if (it == ds.columns.end()) {
            throw Error(ErrorCategory::dimension,
                        "model feature '" + f.names[k] + "' missing from the data");
        }
        f.X.col(static_cast<Eigen::Index>(k)) = X.col(it - ds.columns.begin());
    }
    return f;
}

// ---------------------------------------------------------------------------

struct FitCommand {
    std::string data, schema, phenotype, out_model;
    TrainOptions train;

    void run() const
    {
        const EnnConfig cfg = train.config();
        const Loaded l = load_standardized(data, schema);
        const Features f = features_of(l);
        const Vector& y = l.scaled.phenotype(phenotype);
        const auto fit = minimize(init_params(f.X.cols(), cfg.hidden_units, cfg.seed), cfg, f.X, y);
        save_model({fit.params, cfg, fit_meta("ENN", phenotype, fit, f)}, out_model);
        report_fit(fit, cfg, l.scaled.X, y);
    }
};

struct TransferCommand {
    std::string data, schema, source_model, source_phenotype, target_phenotype, out_model;
    std::string freeze = "w1b1";
    bool cold_start = false;
    TrainOptions train;

    void run() const
    {
        EnnConfig cfg = train.config();
        const Loaded l = load_standardized(data, schema);
        TransferPlan plan;
        plan.target_phenotype = target_phenotype;
        plan.freeze = parse_freeze(freeze);
        plan.reuse_as_warm_start = !cold_start;

        ModelParams source;
        Features f;
        if (!source_model.empty()) {
            const SavedModel saved = load_model(source_model);
            source = saved.params;
            f = features_for(saved, l.raw);
            plan.source_phenotype = saved.training_meta.value("phenotype", std::string());
        } else {
            f = features_of(l);
            plan.source_phenotype = source_phenotype;
            const auto src = fit_source_full(cfg, f.X, l.raw.phenotype(source_phenotype));
            source = src.params;
            std::cout << "source_iterations\t" << src.report.iterations << '\n';
        }
        const Vector& y = l.raw.phenotype(target_phenotype);
        const auto fit = transfer_fit(source, plan, cfg, f.X, y);
        cfg.hidden_units = static_cast<int>(fit.params.q());
        auto meta = fit_meta("ENN.TF", target_phenotype, fit, f);
        meta["source_phenotype"] = plan.source_phenotype;
        meta["freeze"] = to_string(plan.freeze);
        meta["warm_start"] = plan.reuse_as_warm_start;
        save_model({fit.params, cfg, meta}, out_model);
        report_fit(fit, cfg, f.X, y);
    }
};

struct ExperimentCommand {
    std::string config_path;
    std::string out_dir;

    void run() const
    {
        const nlohmann::json j = read_json(config_path);
        ExperimentConfig cfg = ExperimentConfig::from_json(j);
        // Relative paths inside the config are relative to the config file.
        const fs::path base = fs::path(config_path).parent_path();
        auto resolve = [&](const std::string& p) {
            return fs::path(p).is_absolute() ? p : (base / p).string();
        };
        if (!out_dir.empty()) {
            cfg.output_dir = out_dir;
        } else if (!cfg.output_dir.empty()) {
            cfg.output_dir = resolve(cfg.output_dir);
        } else {
            throw Error(ErrorCategory::config, "set 'output_dir' in the config or pass --out");
        }

        Dataset ds;
        if (j.contains("synthetic")) {
            ds = generate_synthetic(SyntheticSpec::from_json(j.at("synthetic"))).dataset;
        } else if (j.contains("data") && j.contains("schema")) {
            ds = load_csv(resolve(j.at("data").get<std::string>()),
                          Schema::load(resolve(j.at("schema").get<std::string>())));
            for (const auto& w : ds.warnings) std::cerr << "warning: " << w << '\n';
        } else {
            throw Error(ErrorCategory::config,
                        "experiment config needs 'synthetic' or both 'data' and 'schema'");
        }

        const ExperimentResult result = run_experiment_full(cfg, ds);
        const fs::path out(cfg.output_dir);
        make_dirs(out / "models");
        write_text((out / "table.tsv").string(), table_tsv(result.report));
        write_text((out / "replicates.tsv").string(), replicates_tsv(result.report));
        if (result.report.has_transfer) {
            write_text((out / "negative_transfer.tsv").string(),
                       negative_transfer_tsv(result.report));
        }

        std::vector<SavedModel> scratch;
        for (const auto& m : result.first_replicate_models) {
            const std::string tau = format_g6(m.tau);
            save_model(m.scratch, (out / "models" / ("ENN_tau" + tau + ".json")).string());
            if (m.transfer) {
                save_model(*m.transfer, (out / "models" / ("ENN.TF_tau" + tau + ".json")).string());
            }
            scratch.push_back(m.scratch);
        }
        const auto rd = ReplicateData::prepare(ds, SplitSpec{cfg.replicates, cfg.master_seed}, 0);
        write_text((out / "curves.tsv").string(),
                   curves_tsv(export_expectile_curves(scratch, rd.X_test)));

        std::cout << table_tsv(result.report);
        std::cerr << "replicates with negative transfer: "
                  << result.report.replicates_with_negative_transfer() << " of "
                  << result.report.replicate_count() << '\n';
    }
};

struct SynthCommand {
    std::string spec_path, out_csv, out_truth;

    void run() const
    {
        const auto spec = SyntheticSpec::from_json(read_json(spec_path));
        const auto data = generate_synthetic(spec);
        write_csv(data.dataset, out_csv);
        write_text(out_truth, data.truth.dump(2) + "\n");
        std::cout << "rows\t" << data.dataset.n() << "\nsnps\t" << data.dataset.p() << '\n';
    }
};

struct CurvesCommand {
    std::string models_dir, data, schema, out;
    std::string role = "ENN";
    std::optional<Eigen::Index> rows;

    void run() const
    {
        if (!fs::is_directory(models_dir)) {
            throw Error(ErrorCategory::io, "models directory " + models_dir + " not found");
        }
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(models_dir)) {
            if (e.path().extension() == ".json") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        std::vector<SavedModel> models;
        for (const auto& f : files) {
            SavedModel m = load_model(f.string());
            if (role.empty() || m.training_meta.value("role", role) == role) {
                models.push_back(std::move(m));
            }
        }
        if (models.empty()) {
            throw Error(ErrorCategory::data, "no models with role '" + role + "' in " + models_dir);
        }
        const Dataset ds = load_csv(data, Schema::load(schema));
        DataMatrix X = features_for(models.front(), ds).X;
        if (rows) {
            if (*rows < 1 || *rows > X.rows()) {
                throw Error(ErrorCategory::config, "--rows must lie in [1, " +
                                                       std::to_string(X.rows()) + "]");
            }
            X = X.topRows(*rows).eval();
        }
        const std::string tsv = curves_tsv(export_expectile_curves(models, X));
        if (out.empty()) {
            std::cout << tsv;
        } else {
            write_text(out, tsv);
        }
    }
};

struct GradcheckCommand {
    int instances = 200;
    std::uint64_t seed = 1;
    double tolerance = 1e-5;

    void run() const
    {
        const auto r = gradient_self_test(instances, seed);
        std::cout << "instances\t" << r.instances << "\nredrawn\t" << r.skipped
                  << "\nmax_rel_error\t" << format_g6(r.max_rel_error) << '\n';
        if (!(r.max_rel_error <= tolerance)) {
            throw Error(ErrorCategory::numerical,
                        "gradient check failed: max relative error " + format_g6(r.max_rel_error) +
                            " on instance " + std::to_string(r.worst_instance));
        }
        std::cout << "gradcheck passed\n";
    }
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Expectile neural networks with parameter transfer"};
    app.require_subcommand(1);

    FitCommand fit;
    auto* fit_app = app.add_subcommand("fit", "train one network on a phenotype");
    fit_app->add_option("--data", fit.data, "CSV file")->required();
    fit_app->add_option("--schema", fit.schema, "schema JSON")->required();
    fit_app->add_option("--phenotype", fit.phenotype)->required();
    fit_app->add_option("--out-model", fit.out_model, "model JSON to write")->required();
    fit.train.add_to(*fit_app);

    TransferCommand tr;
    auto* tr_app = app.add_subcommand("transfer", "fit a target phenotype from a source network");
    tr_app->add_option("--data", tr.data)->required();
    tr_app->add_option("--schema", tr.schema)->required();
    auto* src_model = tr_app->add_option("--source-model", tr.source_model, "saved source model");
    auto* src_pheno =
        tr_app->add_option("--source-phenotype", tr.source_phenotype, "fit the source first");
    src_model->excludes(src_pheno);
    tr_app->add_option("--target-phenotype", tr.target_phenotype)->required();
    tr_app->add_option("--freeze", tr.freeze, "w1b1, none or all")
        ->check(CLI::IsMember({"w1b1", "none", "all"}))
        ->capture_default_str();
    tr_app->add_flag("--cold-start", tr.cold_start,
                     "take only frozen blocks from the source, initialize the rest");
    tr_app->add_option("--out-model", tr.out_model)->required();
    tr.train.add_to(*tr_app);

    ExperimentCommand ex;
    auto* ex_app = app.add_subcommand("experiment", "run the replicate protocol from a config");
    ex_app->add_option("--config", ex.config_path, "experiment JSON")->required();
    ex_app->add_option("--out", ex.out_dir, "output directory (overrides the config)");

    SynthCommand sy;
    auto* sy_app = app.add_subcommand("synth", "generate a paired synthetic dataset");
    sy_app->add_option("--spec", sy.spec_path, "synthetic spec JSON")->required();
    sy_app->add_option("--out-csv", sy.out_csv)->required();
    sy_app->add_option("--out-truth", sy.out_truth)->required();

    CurvesCommand cu;
    auto* cu_app = app.add_subcommand("curves", "sorted expectile curves from saved models");
    cu_app->add_option("--models", cu.models_dir, "directory of model JSON files")->required();
    cu_app->add_option("--data", cu.data)->required();
    cu_app->add_option("--schema", cu.schema)->required();
    cu_app->add_option("--role", cu.role, "training_meta role to keep; empty keeps all")
        ->capture_default_str();
    cu_app->add_option("--rows", cu.rows, "use only the first N rows");
    cu_app->add_option("--out", cu.out, "TSV path (default stdout)");

    GradcheckCommand gc;
    auto* gc_app = app.add_subcommand("gradcheck", "finite-difference self-test of the gradient");
    gc_app->add_option("--instances", gc.instances)->capture_default_str();
    gc_app->add_option("--seed", gc.seed)->capture_default_str();
    gc_app->add_option("--tol", gc.tolerance)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << '\n';
        return 64;
    }

    try {
        if (tr_app->parsed() && tr.source_model.empty() && tr.source_phenotype.empty()) {
            throw Error(ErrorCategory::config, "transfer needs --source-model or --source-phenotype");
        }
        if (fit_app->parsed()) fit.run();
        if (tr_app->parsed()) tr.run();
        if (ex_app->parsed()) ex.run();
        if (sy_app->parsed()) sy.run();
        if (cu_app->parsed()) cu.run();
        if (gc_app->parsed()) gc.run();
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.category()) << ": " << e.what() << '\n';
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
