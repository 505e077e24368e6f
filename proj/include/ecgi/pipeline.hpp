#pragma once

#include "ecgi/beat.hpp"
#include "ecgi/csv.hpp"
#include "ecgi/explain/gradcam.hpp"
#include "ecgi/explain/noise.hpp"
#include "ecgi/explain/pdp.hpp"
#include "ecgi/explain/pfi.hpp"
#include "ecgi/explain/shap.hpp"
#include "ecgi/model/factory.hpp"
#include "ecgi/stats/folds.hpp"
#include "ecgi/stats/metrics.hpp"
#include "ecgi/stats/tests.hpp"
#include "ecgi/stats/variance.hpp"
#include "ecgi/svg.hpp"
#include "ecgi/synth.hpp"
#include "ecgi/wfdb.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

// Pipeline drivers behind the CLI subcommands. Every emitted SVG has a CSV
// carrying the same numbers, and everything a command writes is a pure
// function of (inputs, seed), so reruns are byte-identical.
namespace ecgi::pipeline {

namespace fs = std::filesystem;

struct RunConfig {
    std::string db_dir;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    std::string split = "beat"; // beat | patient
    double train_fraction = 0.75;
    std::vector<int> test_records = {104, 113, 119, 208, 210};
    std::vector<std::string> models = {"nb", "rfc", "mlp", "cnn", "lstm"};
    std::size_t epochs = 0; // 0 keeps the per-model default
    std::size_t batch = 0;
    std::size_t kfold = 6;
    std::size_t subsample = 0; // per-class row cap before evaluation; 0 = off
    std::size_t max_shap_instances = 50;
    std::size_t shap_coalitions = 256;
    std::size_t max_instances = 2000; // per-model cap for gradcam / pfi / pdp sets
    std::size_t pfi_repeats = 5;
    std::size_t grid_size = 20;
    double noise_std_factor = 0.25;
    bool add_noise = false; // perturb the explanation set before interpreting
    int threads = 0;        // 0 = hardware concurrency
    bool verbose = false;
    bool quiet = false;     // suppress the stdout summary (library callers)
};

inline model::TrainConfig make_train_config(model::ModelKind kind, const RunConfig& cfg) {
    auto tc = model::default_config(kind, cfg.seed);
    if (cfg.epochs) tc.epochs = cfg.epochs;
    if (cfg.batch) tc.batch = cfg.batch;
    tc.verbose = cfg.verbose;
    return tc;
}

inline SplitSpec make_split_spec(const RunConfig& cfg) {
    SplitSpec spec;
    spec.mode = cfg.split == "patient" ? SplitSpec::Mode::PatientHoldout
                                       : SplitSpec::Mode::BeatHoldout;
    spec.train_fraction = cfg.train_fraction;
    spec.test_records = cfg.test_records;
    spec.seed = cfg.seed;
    return spec;
}

inline fs::path out_file(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out_dir);
    return fs::path(cfg.out_dir) / name;
}

namespace detail {

inline double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) ++hit;
    return pred.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(pred.size());
}

inline std::vector<std::string> class_names() {
    std::vector<std::string> names;
    for (int c = 1; c <= kNumClasses; ++c) names.emplace_back(1, class_symbol(c));
    return names;
}

inline void write_confusion(const RunConfig& cfg, const std::string& name,
                            const stats::MetricsReport& rep) {
    csv::Writer out(out_file(cfg, name + ".csv").string());
    std::vector<std::string> header = {"true\\pred"};
    for (int c = 1; c <= kNumClasses; ++c) header.emplace_back(1, class_symbol(c));
    out.raw_row(header);
    std::vector<std::vector<double>> cells(kNumClasses, std::vector<double>(kNumClasses));
    for (int r = 0; r < kNumClasses; ++r) {
        std::vector<std::string> row = {std::string(1, class_symbol(r + 1))};
        for (int c = 0; c < kNumClasses; ++c) {
            row.push_back(std::to_string(rep.confusion[r][c]));
            cells[r][c] = static_cast<double>(rep.confusion[r][c]);
        }
        out.raw_row(row);
    }
    out.close();
    svg::heatmap(out_file(cfg, name + ".svg").string(), name, class_names(), class_names(),
                 cells);
}

inline void write_per_class(const RunConfig& cfg, const std::string& name,
                            const stats::MetricsReport& rep) {
    csv::Writer out(out_file(cfg, name).string());
    out.row("class", "precision", "recall", "f1", "support");
    for (int c = 0; c < kNumClasses; ++c)
        out.row(std::string(1, class_symbol(c + 1)), rep.precision[c], rep.recall[c], rep.f1[c],
                rep.support[c]);
    out.close();
}

inline void write_importance(const RunConfig& cfg, const std::string& stem,
                             const explain::ImportanceVector& imp, const std::string& title) {
    csv::Writer out(out_file(cfg, stem + ".csv").string());
    out.row("segment", "weight", "stdev", "n_repeats");
    std::vector<std::string> labels;
    std::vector<double> weights, stdevs;
    for (std::size_t k = 0; k < kNumSegments; ++k) {
        out.row(k + 1, imp.weights[k], imp.stdevs[k], imp.n_repeats);
        labels.push_back(std::to_string(k + 1));
        weights.push_back(imp.weights[k]);
        stdevs.push_back(imp.stdevs[k]);
    }
    out.close();
    svg::bar_chart(out_file(cfg, stem + ".svg").string(), title, labels, weights, stdevs,
                   "accuracy drop");
}

inline BeatDataset explanation_set(const RunConfig& cfg, const BeatDataset& test) {
    if (cfg.max_instances == 0 || test.size() <= cfg.max_instances) return test;
    return subsample_per_class(test, std::max<std::size_t>(1, cfg.max_instances / kNumClasses),
                               cfg.seed + 17);
}

} // namespace detail

// ---------------------------------------------------------------------------
// synth: write the bundled synthetic corpus (stand-in for the real database)
// ---------------------------------------------------------------------------
inline void cmd_synth(const RunConfig& cfg) {
    if (cfg.db_dir.empty()) throw OutOfRange("synth: --db directory required");
    synth::generate_corpus(cfg.db_dir, cfg.seed);
}

// ---------------------------------------------------------------------------
// ingest: records -> beats.csv (+ per-record class counts)
// ---------------------------------------------------------------------------
inline BeatDataset ingest_directory(const fs::path& db_dir,
                                    std::vector<std::array<std::string, 3>>* summary = nullptr,
                                    std::size_t* skipped_total = nullptr) {
    if (!fs::is_directory(db_dir)) throw MissingFile("ingest: no such directory " + db_dir.string());
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(db_dir))
        if (entry.path().extension() == ".hea") names.push_back(entry.path().stem().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw MissingFile("ingest: no .hea records in " + db_dir.string());

    BeatDataset all;
    for (const auto& name : names) {
        const auto record = wfdb::load_record(db_dir, name);
        const auto extracted = extract_beats(record);
        if (skipped_total) *skipped_total += extracted.skipped_out_of_bounds;
        std::map<int, std::size_t> counts;
        for (const auto& beat : extracted.beats) {
            all.push_beat(beat);
            ++counts[beat.class_id];
        }
        if (summary)
            for (const auto& [cls, n] : counts)
                summary->push_back({name, std::string(1, class_symbol(cls)), std::to_string(n)});
    }
    return all;
}

inline void cmd_ingest(const RunConfig& cfg) {
    std::vector<std::array<std::string, 3>> summary;
    std::size_t skipped = 0;
    const auto beats = ingest_directory(cfg.db_dir, &summary, &skipped);
    write_csv(beats, out_file(cfg, "beats.csv").string());
    csv::Writer out(out_file(cfg, "ingest_summary.csv").string());
    out.row("record", "class", "beats");
    if (!cfg.quiet) std::printf("record,class,beats\n");
    for (const auto& row : summary) {
        out.raw_row({row[0], row[1], row[2]});
        if (!cfg.quiet) std::printf("%s,%s,%s\n", row[0].c_str(), row[1].c_str(), row[2].c_str());
    }
    out.row("(all)", "(skipped_windows)", skipped);
    out.close();
    if (!cfg.quiet) std::printf("(all),(skipped_windows),%zu\n", skipped);
}

// ---------------------------------------------------------------------------
// resample: beats.csv -> train/test/train_resampled CSVs
// ---------------------------------------------------------------------------
inline void cmd_resample(const RunConfig& cfg) {
    auto beats = read_csv(out_file(cfg, "beats.csv").string());
    if (cfg.subsample) beats = subsample_per_class(beats, cfg.subsample, cfg.seed + 1);
    auto [train, test] = split(beats, make_split_spec(cfg));
    const auto balanced = bootstrap_resample(train, cfg.seed + 2);

    write_csv(train, out_file(cfg, "train.csv").string());
    write_csv(test, out_file(cfg, "test.csv").string());
    write_csv(balanced, out_file(cfg, "train_resampled.csv").string());

    csv::Writer out(out_file(cfg, "split_summary.csv").string());
    out.row("side", "class", "beats");
    auto dump = [&](const char* side, const BeatDataset& ds) {
        for (const auto& [cls, n] : ds.class_counts())
            out.raw_row({side, std::string(1, class_symbol(cls)), std::to_string(n)});
    };
    dump("train", train);
    dump("test", test);
    dump("train_resampled", balanced);
    out.close();
}

// ---------------------------------------------------------------------------
// train: train_resampled.csv -> model files
// ---------------------------------------------------------------------------
inline void cmd_train(const RunConfig& cfg) {
    const auto train = read_csv(out_file(cfg, "train_resampled.csv").string());
    for (const auto& name : cfg.models) {
        const auto kind = model::kind_from_name(name);
        auto m = model::make_model(kind);
        m->fit(train, make_train_config(kind, cfg));
        m->save(out_file(cfg, "model_" + name + ".ecgi"));
        // epoch losses, when the model kind records them
        std::vector<double> losses;
        if (kind == model::ModelKind::CNN)
            losses = static_cast<model::CnnModel*>(m.get())->loss_history();
        else if (kind == model::ModelKind::LSTM)
            losses = static_cast<model::LstmModel*>(m.get())->loss_history();
        else if (kind == model::ModelKind::MLP)
            losses = static_cast<model::MlpModel*>(m.get())->loss_history();
        if (!losses.empty()) {
            csv::Writer out(out_file(cfg, "train_log_" + name + ".csv").string());
            out.row("epoch", "loss");
            for (std::size_t e = 0; e < losses.size(); ++e) out.row(e + 1, losses[e]);
            out.close();
        }
    }
}

// ---------------------------------------------------------------------------
// eval-cv: stratified k-fold on the unsampled dataset; train sides are
// bootstrap-resampled before each fit, test sides stay untouched
// ---------------------------------------------------------------------------
struct FoldScore {
    std::string model;
    std::size_t fold = 0;
    stats::MetricsReport report;
};

inline std::vector<FoldScore> run_cv(const BeatDataset& dataset,
                                     const std::vector<std::string>& kinds, std::size_t k,
                                     std::uint64_t seed, const RunConfig& cfg) {
    std::vector<FoldScore> scores;
    for (const auto& name : kinds) {
        const auto kind = model::kind_from_name(name);
        const auto folds = stats::stratified_kfold(dataset, k, seed);
        std::vector<stats::MetricsReport> reports(k);
        const Rng master(seed);
        parallel_for(k, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t f = lo; f < hi; ++f) {
                auto train = bootstrap_resample(dataset.gather(folds[f].train),
                                                master.spawn(900 + f).next_u64());
                auto tc = make_train_config(kind, cfg);
                tc.seed = master.spawn(100 + f).next_u64();
                auto m = model::make_model(kind);
                m->fit(train, tc);
                const auto test = dataset.gather(folds[f].test);
                reports[f] = stats::metrics(test.labels(), m->predict(test));
            }
        });
        for (std::size_t f = 0; f < k; ++f) scores.push_back({name, f, reports[f]});
    }
    return scores;
}

inline void write_fold_scores(const RunConfig& cfg, const std::string& name,
                              const std::vector<FoldScore>& scores) {
    csv::Writer out(out_file(cfg, name).string());
    out.row("model", "fold", "accuracy", "precision", "recall", "f1", "weighted_precision",
            "weighted_recall", "weighted_f1");
    for (const auto& s : scores)
        out.row(s.model, s.fold, s.report.accuracy, s.report.macro_precision,
                s.report.macro_recall, s.report.macro_f1, s.report.weighted_precision,
                s.report.weighted_recall, s.report.weighted_f1);
    out.close();
}

inline void cmd_eval_cv(const RunConfig& cfg) {
    auto beats = read_csv(out_file(cfg, "beats.csv").string());
    if (cfg.subsample) beats = subsample_per_class(beats, cfg.subsample, cfg.seed + 1);
    const auto scores = run_cv(beats, cfg.models, cfg.kfold, cfg.seed, cfg);
    write_fold_scores(cfg, "cv_fold_scores.csv", scores);

    // per-model confusions summed over folds, plus a mean/stdev bar chart
    csv::Writer summary(out_file(cfg, "cv_metrics.csv").string());
    summary.row("model", "metric", "mean", "stdev");
    std::vector<std::string> chart_labels;
    std::vector<double> chart_means, chart_err;
    for (const auto& name : cfg.models) {
        stats::MetricsReport total;
        std::vector<double> acc, prec, rec, f1;
        std::vector<int> truth_all, pred_all;
        for (const auto& s : scores) {
            if (s.model != name) continue;
            for (int r = 0; r < kNumClasses; ++r)
                for (int c = 0; c < kNumClasses; ++c)
                    total.confusion[r][c] += s.report.confusion[r][c];
            acc.push_back(s.report.accuracy);
            prec.push_back(s.report.macro_precision);
            rec.push_back(s.report.macro_recall);
            f1.push_back(s.report.macro_f1);
        }
        detail::write_confusion(cfg, "cv_confusion_" + name, total);
        // per-class scores recomputed from the pooled confusion
        std::vector<int> t, p;
        for (int r = 0; r < kNumClasses; ++r)
            for (int c = 0; c < kNumClasses; ++c)
                for (std::size_t i = 0; i < total.confusion[r][c]; ++i) {
                    t.push_back(r + 1);
                    p.push_back(c + 1);
                }
        detail::write_per_class(cfg, "cv_per_class_" + name + ".csv", stats::metrics(t, p));

        const char* metric_names[4] = {"accuracy", "precision", "recall", "f1"};
        const std::vector<double>* metric_values[4] = {&acc, &prec, &rec, &f1};
        for (int mi = 0; mi < 4; ++mi) {
            double mean = 0, sq = 0;
            for (double v : *metric_values[mi]) mean += v;
            mean /= static_cast<double>(metric_values[mi]->size());
            for (double v : *metric_values[mi]) sq += (v - mean) * (v - mean);
            const double stdev = std::sqrt(sq / static_cast<double>(metric_values[mi]->size()));
            summary.row(name, metric_names[mi], mean, stdev);
            if (mi == 0) {
                chart_labels.push_back(name);
                chart_means.push_back(mean);
                chart_err.push_back(stdev);
            }
        }
    }
    summary.close();
    svg::bar_chart(out_file(cfg, "cv_metrics.svg").string(), "cross-validation accuracy",
                   chart_labels, chart_means, chart_err, "accuracy");
}

// ---------------------------------------------------------------------------
// eval-lgo: leave the held-out patients out, train on the rest
// ---------------------------------------------------------------------------
inline void cmd_eval_lgo(const RunConfig& cfg) {
    auto beats = read_csv(out_file(cfg, "beats.csv").string());
    if (cfg.subsample) beats = subsample_per_class(beats, cfg.subsample, cfg.seed + 1);
    auto [train_raw, test] = stats::leave_groups_out(beats, cfg.test_records);
    const auto train = bootstrap_resample(train_raw, cfg.seed + 3);

    {
        csv::Writer out(out_file(cfg, "lgo_class_histogram.csv").string());
        out.row("side", "class", "beats");
        for (const auto& [cls, n] : train_raw.class_counts())
            out.raw_row({"train", std::string(1, class_symbol(cls)), std::to_string(n)});
        for (const auto& [cls, n] : test.class_counts())
            out.raw_row({"test", std::string(1, class_symbol(cls)), std::to_string(n)});
        out.close();
    }

    csv::Writer scores(out_file(cfg, "lgo_scores.csv").string());
    scores.row("model", "accuracy", "precision", "recall", "f1", "weighted_precision",
               "weighted_recall", "weighted_f1");
    std::vector<std::string> labels;
    std::vector<double> accs;
    for (const auto& name : cfg.models) {
        const auto kind = model::kind_from_name(name);
        auto m = model::make_model(kind);
        m->fit(train, make_train_config(kind, cfg));
        m->save(out_file(cfg, "lgo_model_" + name + ".ecgi"));
        const auto rep = stats::metrics(test.labels(), m->predict(test));
        scores.row(name, rep.accuracy, rep.macro_precision, rep.macro_recall, rep.macro_f1,
                   rep.weighted_precision, rep.weighted_recall, rep.weighted_f1);
        detail::write_confusion(cfg, "lgo_confusion_" + name, rep);
        detail::write_per_class(cfg, "lgo_per_class_" + name + ".csv", rep);
        labels.push_back(name);
        accs.push_back(rep.accuracy);
    }
    scores.close();
    svg::bar_chart(out_file(cfg, "lgo_metrics.svg").string(), "leave-groups-out accuracy", labels,
                   accs, {}, "accuracy");
}

// ---------------------------------------------------------------------------
// interpret: pdp | shap | pfi | gradcam over trained model files
// ---------------------------------------------------------------------------
inline void cmd_interpret(const RunConfig& cfg, const std::string& method) {
    const auto test_path = out_file(cfg, "test.csv");
    const auto train_path = out_file(cfg, "train_resampled.csv");
    const auto test = read_csv(test_path.string());
    auto subset = detail::explanation_set(cfg, test);
    if (cfg.add_noise)
        subset = explain::add_gaussian_noise(subset, cfg.noise_std_factor, cfg.seed + 8);

    for (const auto& name : cfg.models) {
        const auto kind = model::kind_from_name(name);
        const auto model_path = out_file(cfg, "model_" + name + ".ecgi");
        if (!fs::exists(model_path)) throw MissingFile("interpret: train " + name + " first");
        auto m = model::load_model(model_path);

        if (method == "gradcam") {
            auto* saliency = dynamic_cast<model::SaliencyCapable*>(m.get());
            if (!saliency)
                throw WrongKind("gradcam needs a cnn or lstm model, got " + name);
            const auto pred = m->predict(subset);
            std::vector<explain::SaliencyMap> maps;
            csv::Writer rows(out_file(cfg, "gradcam_" + name + "_maps.csv").string());
            {
                std::vector<std::string> header = {"class", "correct"};
                for (std::size_t t = 0; t < kBeatLength; ++t)
                    header.push_back("v" + std::to_string(t));
                for (std::size_t k = 1; k <= kNumSegments; ++k)
                    header.push_back("w" + std::to_string(k));
                rows.raw_row(header);
            }
            for (std::size_t i = 0; i < subset.size(); ++i) {
                auto map = explain::grad_cam(*saliency, subset.row(i), subset.label(i),
                                             pred[i] == subset.label(i));
                std::vector<std::string> fields = {std::to_string(map.class_id),
                                                   map.correct ? "1" : "0"};
                for (double v : map.values) fields.push_back(csv::format(v));
                for (double w : map.segment_weights) fields.push_back(csv::format(w));
                rows.raw_row(fields);
                maps.push_back(std::move(map));
            }
            rows.close();

            csv::Writer agg(out_file(cfg, "gradcam_" + name + "_aggregate.csv").string());
            {
                std::vector<std::string> header = {"class", "correct", "count"};
                for (std::size_t k = 1; k <= kNumSegments; ++k)
                    header.push_back("w" + std::to_string(k));
                agg.raw_row(header);
            }
            for (int cls = 1; cls <= kNumClasses; ++cls) {
                for (bool correct : {true, false}) {
                    explain::SaliencyFilter filter{cls, correct};
                    try {
                        const auto mean = explain::aggregate_saliency(maps, filter);
                        std::vector<std::string> fields = {std::to_string(cls),
                                                           correct ? "1" : "0",
                                                           std::to_string(mean.count)};
                        for (double w : mean.segment_weights) fields.push_back(csv::format(w));
                        agg.raw_row(fields);
                        if (correct) {
                            // overlay figure on the first matching beat
                            for (std::size_t i = 0; i < subset.size(); ++i) {
                                if (subset.label(i) != cls) continue;
                                std::vector<double> beat(subset.row(i),
                                                         subset.row(i) + kBeatLength);
                                svg::saliency_overlay(
                                    out_file(cfg, "gradcam_" + name + "_class" +
                                                      std::to_string(cls) + ".svg")
                                        .string(),
                                    "gradcam " + name + " class " +
                                        std::string(1, class_symbol(cls)),
                                    beat, {mean.values.begin(), mean.values.end()},
                                    {mean.segment_weights.begin(), mean.segment_weights.end()});
                                break;
                            }
                        }
                    } catch (const EmptySelection&) {
                        // a class/correctness cell can be empty; skip its row
                    }
                }
            }
            agg.close();
        } else if (method == "pfi") {
            const auto imp =
                explain::permutation_importance(*m, subset, cfg.pfi_repeats, cfg.seed + 5);
            detail::write_importance(cfg, "pfi_" + name, imp, "permutation importance " + name);
            try {
                const auto both =
                    explain::pfi_by_correctness(*m, subset, cfg.pfi_repeats, cfg.seed + 6);
                detail::write_importance(cfg, "pfi_" + name + "_correct", both.correct,
                                         "pfi correct " + name);
                detail::write_importance(cfg, "pfi_" + name + "_misclassified",
                                         both.misclassified, "pfi misclassified " + name);
            } catch (const EmptySubset&) {
                // perfect (or fully wrong) predictions: no split to report
            }
        } else if (method == "pdp") {
            csv::Writer out(out_file(cfg, "pdp_" + name + ".csv").string());
            out.row("segment", "grid_value", "mean_response", "target_class");
            std::vector<svg::Series> series;
            for (int seg = 1; seg <= static_cast<int>(kNumSegments); ++seg) {
                const auto curve = explain::pdp_one_way(*m, subset, seg, cfg.grid_size);
                svg::Series s;
                s.label = "seg " + std::to_string(seg);
                for (std::size_t g = 0; g < curve.grid.size(); ++g) {
                    out.row(seg, curve.grid[g], curve.mean_response[g], curve.target_class);
                    s.x.push_back(curve.grid[g]);
                    s.y.push_back(curve.mean_response[g]);
                }
                series.push_back(std::move(s));
            }
            out.close();
            svg::line_plot(out_file(cfg, "pdp_" + name + ".svg").string(),
                           "partial dependence " + name, series, "segment mean",
                           "mean probability");
        } else if (method == "shap") {
            const auto train = read_csv(train_path.string());
            const auto background = explain::background_mean(train);
            const std::size_t count = std::min<std::size_t>(cfg.max_shap_instances, test.size());
            csv::Writer out(out_file(cfg, "shap_" + name + ".csv").string());
            {
                std::vector<std::string> header = {"instance", "class", "explained_class",
                                                   "base", "output"};
                for (std::size_t k = 1; k <= kNumSegments; ++k)
                    header.push_back("phi" + std::to_string(k));
                out.raw_row(header);
            }
            std::array<double, kNumSegments> mean_abs{};
            for (std::size_t i = 0; i < count; ++i) {
                const auto shap = explain::kernel_shap(*m, test.row(i), background,
                                                       cfg.shap_coalitions, cfg.seed + i);
                std::vector<std::string> fields = {
                    std::to_string(i), std::to_string(test.label(i)),
                    std::to_string(shap.explained_class), csv::format(shap.base_value),
                    csv::format(shap.explained_output)};
                for (std::size_t k = 0; k < kNumSegments; ++k) {
                    fields.push_back(csv::format(shap.phi[k]));
                    mean_abs[k] += std::abs(shap.phi[k]);
                }
                out.raw_row(fields);
            }
            out.close();
            csv::Writer summary(out_file(cfg, "shap_" + name + "_summary.csv").string());
            summary.row("segment", "mean_abs_phi");
            std::vector<std::string> labels;
            std::vector<double> values;
            for (std::size_t k = 0; k < kNumSegments; ++k) {
                mean_abs[k] /= static_cast<double>(std::max<std::size_t>(1, count));
                summary.row(k + 1, mean_abs[k]);
                labels.push_back(std::to_string(k + 1));
                values.push_back(mean_abs[k]);
            }
            summary.close();
            svg::bar_chart(out_file(cfg, "shap_" + name + "_summary.svg").string(),
                           "mean |phi| " + name, labels, values, {}, "mean |phi|");
        } else {
            throw OutOfRange("interpret: unknown method '" + method + "'");
        }
    }
}

// ---------------------------------------------------------------------------
// stats: CI / Shapiro-Wilk / Kruskal-Wallis over the fold scores, pairwise
// Wilcoxon matrices, Kendall correlations over importance weights
// ---------------------------------------------------------------------------
inline void cmd_stats(const RunConfig& cfg) {
    // fold scores back in
    csv::Reader in(out_file(cfg, "cv_fold_scores.csv").string());
    std::vector<std::string_view> fields;
    if (!in.next(fields) || fields.size() < 6) throw SchemaError("stats: bad cv_fold_scores.csv");
    std::map<std::string, std::array<std::vector<double>, 4>> per_model; // acc prec rec f1
    while (in.next(fields)) {
        if (fields.size() < 6 || fields[0].empty()) continue;
        auto& cols = per_model[std::string(fields[0])];
        for (int mi = 0; mi < 4; ++mi)
            cols[static_cast<std::size_t>(mi)].push_back(
                csv::parse_double(fields[static_cast<std::size_t>(2 + mi)]));
    }
    if (per_model.size() < 2) throw TooFewGroups("stats: need fold scores for >= 2 models");

    const char* metric_names[4] = {"accuracy", "precision", "recall", "f1"};
    {
        csv::Writer ci(out_file(cfg, "ci_table.csv").string());
        ci.row("metric", "ci_low", "ci_high", "kruskal_h", "kruskal_p", "shapiro_w", "shapiro_p");
        for (int mi = 0; mi < 4; ++mi) {
            std::vector<double> pooled;
            std::vector<std::vector<double>> groups;
            for (const auto& [name, cols] : per_model) {
                groups.push_back(cols[static_cast<std::size_t>(mi)]);
                pooled.insert(pooled.end(), cols[static_cast<std::size_t>(mi)].begin(),
                              cols[static_cast<std::size_t>(mi)].end());
            }
            const auto [lo, hi] = stats::confidence_interval_95(pooled);
            const auto kw = stats::kruskal_wallis(groups);
            double sw_w = 0, sw_p = 0;
            try {
                const auto sw = stats::shapiro_wilk(pooled);
                sw_w = sw.statistic;
                sw_p = sw.p_value;
            } catch (const ConstantInput&) {
                sw_w = 1.0;
                sw_p = 1.0;
            }
            ci.row(metric_names[mi], lo, hi, kw.statistic, kw.p_value, sw_w, sw_p);
        }
        ci.close();
    }

    // pairwise Wilcoxon per metric
    std::vector<std::string> model_names;
    for (const auto& [name, cols] : per_model) model_names.push_back(name);
    for (int mi = 0; mi < 4; ++mi) {
        csv::Writer out(
            out_file(cfg, std::string("wilcoxon_") + metric_names[mi] + ".csv").string());
        std::vector<std::string> header = {"model"};
        header.insert(header.end(), model_names.begin(), model_names.end());
        out.raw_row(header);
        std::vector<std::vector<double>> cells;
        for (const auto& a : model_names) {
            std::vector<std::string> row = {a};
            std::vector<double> cell_row;
            for (const auto& b : model_names) {
                double p = 1.0;
                if (a != b) {
                    try {
                        p = stats::wilcoxon_signed_rank(per_model[a][static_cast<std::size_t>(mi)],
                                                        per_model[b][static_cast<std::size_t>(mi)])
                                .p_value;
                    } catch (const AllZeroDifferences&) {
                        p = 1.0;
                    }
                }
                row.push_back(csv::format(p));
                cell_row.push_back(p);
            }
            out.raw_row(row);
            cells.push_back(std::move(cell_row));
        }
        out.close();
        svg::heatmap(out_file(cfg, std::string("wilcoxon_") + metric_names[mi] + ".svg").string(),
                     std::string("wilcoxon p, ") + metric_names[mi], model_names, model_names,
                     cells);
    }

    // Kendall tau between per-model PFI weight vectors
    std::vector<std::string> pfi_models;
    std::vector<std::vector<double>> pfi_vectors;
    for (const auto& name : cfg.models) {
        const auto path = out_file(cfg, "pfi_" + name + ".csv");
        if (!fs::exists(path)) continue;
        csv::Reader pin(path.string());
        std::vector<std::string_view> f;
        pin.next(f); // header
        std::vector<double> weights;
        while (pin.next(f))
            if (f.size() >= 2 && !f[0].empty()) weights.push_back(csv::parse_double(f[1]));
        if (weights.size() == kNumSegments) {
            pfi_models.push_back(name);
            pfi_vectors.push_back(std::move(weights));
        }
    }
    if (pfi_vectors.size() >= 2) {
        const auto matrix = stats::kendall_matrix(pfi_vectors);
        csv::Writer out(out_file(cfg, "kendall_pfi.csv").string());
        std::vector<std::string> header = {"model"};
        header.insert(header.end(), pfi_models.begin(), pfi_models.end());
        out.raw_row(header);
        for (std::size_t i = 0; i < pfi_models.size(); ++i) {
            std::vector<std::string> row = {pfi_models[i]};
            for (std::size_t j = 0; j < pfi_models.size(); ++j)
                row.push_back(csv::format(matrix.tau[i][j]));
            out.raw_row(row);
        }
        out.close();
        svg::heatmap(out_file(cfg, "kendall_pfi.svg").string(), "kendall tau, pfi weights",
                     pfi_models, pfi_models, matrix.tau);
    }

    // per-segment correlation between CNN and LSTM layer weights across beats
    const auto cnn_maps = out_file(cfg, "gradcam_cnn_maps.csv");
    const auto lstm_maps = out_file(cfg, "gradcam_lstm_maps.csv");
    if (fs::exists(cnn_maps) && fs::exists(lstm_maps)) {
        auto read_weights = [](const fs::path& path) {
            csv::Reader rin(path.string());
            std::vector<std::string_view> f;
            rin.next(f);
            std::vector<std::array<double, kNumSegments>> rows;
            while (rin.next(f)) {
                if (f.size() != 2 + kBeatLength + kNumSegments) continue;
                std::array<double, kNumSegments> w{};
                for (std::size_t k = 0; k < kNumSegments; ++k)
                    w[k] = csv::parse_double(f[2 + kBeatLength + k]);
                rows.push_back(w);
            }
            return rows;
        };
        const auto cnn_w = read_weights(cnn_maps);
        const auto lstm_w = read_weights(lstm_maps);
        const std::size_t n = std::min(cnn_w.size(), lstm_w.size());
        if (n >= 2) {
            csv::Writer out(out_file(cfg, "kendall_cnn_lstm_segments.csv").string());
            out.row("segment", "tau", "p_value");
            for (std::size_t k = 0; k < kNumSegments; ++k) {
                std::vector<double> a(n), b(n);
                for (std::size_t i = 0; i < n; ++i) {
                    a[i] = cnn_w[i][k];
                    b[i] = lstm_w[i][k];
                }
                try {
                    const auto tau = stats::kendall_tau(a, b);
                    out.row(k + 1, tau.statistic, tau.p_value);
                } catch (const ConstantInput&) {
                    out.raw_row({std::to_string(k + 1), "", ""});
                }
            }
            out.close();
        }
    }
}

// ---------------------------------------------------------------------------
// report: variance profiles and the PFI-vs-GradCAM quantile comparison
// ---------------------------------------------------------------------------
inline void cmd_report(const RunConfig& cfg) {
    const auto test = read_csv(out_file(cfg, "test.csv").string());

    {
        csv::Writer out(out_file(cfg, "variance.csv").string());
        out.row("selection", "segment", "variance");
        std::vector<svg::Series> series;
        auto add = [&](const std::string& label, std::optional<int> cls) {
            try {
                const auto profile = stats::variance_per_segment(test, cls);
                svg::Series s;
                s.label = label;
                for (std::size_t k = 0; k < kNumSegments; ++k) {
                    out.raw_row({label, std::to_string(k + 1), csv::format(profile.per_segment[k])});
                    s.x.push_back(static_cast<double>(k + 1));
                    s.y.push_back(profile.per_segment[k]);
                }
                series.push_back(std::move(s));
            } catch (const TooFewBeats&) {
            }
        };
        add("all", std::nullopt);
        for (int c = 1; c <= kNumClasses; ++c) add(std::string(1, class_symbol(c)), c);
        out.close();
        svg::line_plot(out_file(cfg, "variance.svg").string(), "variance per segment", series,
                       "segment", "variance");
    }

    // mean and 25-75% quantiles of gradcam segment weights vs scaled PFI
    for (const auto& name : cfg.models) {
        const auto maps_path = out_file(cfg, "gradcam_" + name + "_maps.csv");
        const auto pfi_path = out_file(cfg, "pfi_" + name + ".csv");
        if (!fs::exists(maps_path) || !fs::exists(pfi_path)) continue;

        std::vector<std::array<double, kNumSegments>> weights;
        {
            csv::Reader rin(maps_path.string());
            std::vector<std::string_view> f;
            rin.next(f);
            while (rin.next(f)) {
                if (f.size() != 2 + kBeatLength + kNumSegments) continue;
                std::array<double, kNumSegments> w{};
                for (std::size_t k = 0; k < kNumSegments; ++k)
                    w[k] = csv::parse_double(f[2 + kBeatLength + k]);
                weights.push_back(w);
            }
        }
        std::vector<double> pfi;
        {
            csv::Reader pin(pfi_path.string());
            std::vector<std::string_view> f;
            pin.next(f);
            while (pin.next(f))
                if (f.size() >= 2 && !f[0].empty()) pfi.push_back(csv::parse_double(f[1]));
        }
        if (weights.empty() || pfi.size() != kNumSegments) continue;

        // min-max scale the PFI onto [0,1] for comparability
        double lo = pfi[0], hi = pfi[0];
        for (double v : pfi) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        std::vector<double> pfi_scaled(kNumSegments, 0.0);
        if (hi > lo)
            for (std::size_t k = 0; k < kNumSegments; ++k)
                pfi_scaled[k] = (pfi[k] - lo) / (hi - lo);

        csv::Writer out(out_file(cfg, "pfi_vs_gradcam_" + name + ".csv").string());
        out.row("segment", "gradcam_mean", "gradcam_q25", "gradcam_q75", "pfi_scaled");
        svg::Series grad_series, pfi_series;
        grad_series.label = "gradcam mean (q25-q75)";
        pfi_series.label = "pfi (scaled)";
        for (std::size_t k = 0; k < kNumSegments; ++k) {
            std::vector<double> column;
            column.reserve(weights.size());
            for (const auto& w : weights) column.push_back(w[k]);
            std::sort(column.begin(), column.end());
            const auto q = [&](double p) {
                const double idx = p * static_cast<double>(column.size() - 1);
                const auto i0 = static_cast<std::size_t>(idx);
                const std::size_t i1 = std::min(i0 + 1, column.size() - 1);
                return column[i0] + (idx - static_cast<double>(i0)) * (column[i1] - column[i0]);
            };
            double mean = 0;
            for (double v : column) mean += v;
            mean /= static_cast<double>(column.size());
            out.row(k + 1, mean, q(0.25), q(0.75), pfi_scaled[k]);
            grad_series.x.push_back(static_cast<double>(k + 1));
            grad_series.y.push_back(mean);
            grad_series.band_lo.push_back(q(0.25));
            grad_series.band_hi.push_back(q(0.75));
            pfi_series.x.push_back(static_cast<double>(k + 1));
            pfi_series.y.push_back(pfi_scaled[k]);
        }
        out.close();
        svg::line_plot(out_file(cfg, "pfi_vs_gradcam_" + name + ".svg").string(),
                       "pfi vs gradcam " + name, {grad_series, pfi_series}, "segment",
                       "scaled weight");
    }
}

} // namespace ecgi::pipeline
