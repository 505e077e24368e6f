// ecgi: MIT-style ECG beat classification and interpretability pipeline.
//
//   ecgi synth     --db DIR                 write the synthetic demo corpus
//   ecgi ingest    --db DIR --out DIR       records -> beats.csv
//   ecgi resample  --out DIR [--split ...]  holdout split + bootstrap balance
//   ecgi train     --out DIR [--models ..]  fit models, write .ecgi files
//   ecgi eval-cv   --out DIR                stratified k-fold cross-validation
//   ecgi eval-lgo  --out DIR                leave-groups-out evaluation
//   ecgi interpret METHOD --out DIR         pdp | shap | pfi | gradcam
//   ecgi stats     --out DIR                CI / KW / Wilcoxon / Kendall tables
//   ecgi report    --out DIR                variance + pfi-vs-gradcam figures
//
// All outputs are CSV plus SVG; a fixed --seed makes reruns byte-identical.
#include "ecgi/pipeline.hpp"

#include <CLI11.hpp>
#include <cxxabi.h>

#include <cstdio>
#include <string>

namespace {

std::string type_name(const std::exception& e) {
    int status = 0;
    char* demangled = abi::__cxa_demangle(typeid(e).name(), nullptr, nullptr, &status);
    std::string name = status == 0 && demangled ? demangled : typeid(e).name();
    std::free(demangled);
    const auto pos = name.rfind("::");
    return pos == std::string::npos ? name : name.substr(pos + 2);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ECG beat classification and interpretability pipeline"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key=value configuration file");

    ecgi::pipeline::RunConfig cfg;
    std::string method;
    app.add_option("--db", cfg.db_dir, "WFDB record directory");
    app.add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", cfg.seed, "master seed")->capture_default_str();
    app.add_option("--split", cfg.split, "holdout mode: beat | patient")->capture_default_str();
    app.add_option("--train-fraction", cfg.train_fraction)->capture_default_str();
    app.add_option("--test-records", cfg.test_records, "patient holdout record ids");
    app.add_option("--models", cfg.models, "model kinds: nb rfc mlp cnn lstm");
    app.add_option("--epochs", cfg.epochs, "override training epochs (0 = default)");
    app.add_option("--batch", cfg.batch, "override batch size (0 = default)");
    app.add_option("--kfold", cfg.kfold)->capture_default_str();
    app.add_option("--subsample", cfg.subsample, "per-class row cap (0 = off)");
    app.add_option("--max-shap-instances", cfg.max_shap_instances)->capture_default_str();
    app.add_option("--shap-coalitions", cfg.shap_coalitions)->capture_default_str();
    app.add_option("--max-instances", cfg.max_instances, "explanation set cap")
        ->capture_default_str();
    app.add_option("--pfi-repeats", cfg.pfi_repeats)->capture_default_str();
    app.add_option("--grid-size", cfg.grid_size)->capture_default_str();
    app.add_option("--noise-std", cfg.noise_std_factor)->capture_default_str();
    app.add_flag("--noise", cfg.add_noise, "perturb the explanation set with gaussian noise");
    app.add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
    app.add_flag("--verbose", cfg.verbose, "per-epoch training output");

    auto* synth = app.add_subcommand("synth", "write the synthetic demo corpus");
    auto* ingest = app.add_subcommand("ingest", "parse records into beats.csv");
    auto* resample = app.add_subcommand("resample", "split and bootstrap-balance the beats");
    auto* train = app.add_subcommand("train", "fit models on train_resampled.csv");
    auto* eval_cv = app.add_subcommand("eval-cv", "stratified k-fold cross-validation");
    auto* eval_lgo = app.add_subcommand("eval-lgo", "leave-groups-out evaluation");
    auto* interpret = app.add_subcommand("interpret", "run an explainer over trained models");
    interpret->add_option("method", method, "pdp | shap | pfi | gradcam")->required();
    auto* stats = app.add_subcommand("stats", "statistical analysis of the fold scores");
    auto* report = app.add_subcommand("report", "variance and comparison figures");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cfg.threads > 0) ecgi::set_threads(cfg.threads);
        if (synth->parsed()) ecgi::pipeline::cmd_synth(cfg);
        if (ingest->parsed()) ecgi::pipeline::cmd_ingest(cfg);
        if (resample->parsed()) ecgi::pipeline::cmd_resample(cfg);
        if (train->parsed()) ecgi::pipeline::cmd_train(cfg);
        if (eval_cv->parsed()) ecgi::pipeline::cmd_eval_cv(cfg);
        if (eval_lgo->parsed()) ecgi::pipeline::cmd_eval_lgo(cfg);
        if (interpret->parsed()) ecgi::pipeline::cmd_interpret(cfg, method);
        if (stats->parsed()) ecgi::pipeline::cmd_stats(cfg);
        if (report->parsed()) ecgi::pipeline::cmd_report(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s: %s\n", type_name(e).c_str(), e.what());
        return 1;
    }
    return 0;
}
