#include "ecgi/pipeline.hpp"

#include <doctest.h>

#include <filesystem>

using namespace ecgi;
namespace fs = std::filesystem;

namespace {

// Two tiny records covering all eight classes keep this end-to-end run fast.
fs::path tiny_corpus() {
    const auto dir = fs::temp_directory_path() / "ecgi_test_pipeline_db";
    fs::remove_all(dir);
    {
        // record 800 covers every class, so the leave-801-out train side stays whole
        synth::RecordPlan a;
        a.name = "800";
        a.class_counts = {{1, 60}, {2, 25}, {3, 25}, {4, 25}, {5, 20}, {6, 15}, {7, 15}, {8, 15}};
        synth::RecordPlan b;
        b.name = "801";
        b.class_counts = {{1, 60}, {4, 10}, {5, 10}, {6, 20}, {7, 20}, {8, 20}};
        Rng rng(3);
        synth::generate_record(dir, a, rng);
        Rng rng2(4);
        synth::generate_record(dir, b, rng2);
    }
    return dir;
}

std::size_t csv_rows(const fs::path& path) {
    csv::Reader in(path.string());
    std::vector<std::string_view> fields;
    std::size_t rows = 0;
    while (in.next(fields))
        if (!(fields.size() == 1 && fields[0].empty())) ++rows;
    return rows;
}

} // namespace

TEST_CASE("the pipeline drivers run end to end on a tiny corpus") {
    const auto out = fs::temp_directory_path() / "ecgi_test_pipeline_out";
    fs::remove_all(out);

    pipeline::RunConfig cfg;
    cfg.db_dir = tiny_corpus().string();
    cfg.out_dir = out.string();
    cfg.seed = 5;
    cfg.models = {"nb", "rfc"};
    cfg.kfold = 2;
    cfg.max_shap_instances = 3;
    cfg.shap_coalitions = 64;
    cfg.max_instances = 120;
    cfg.pfi_repeats = 2;
    cfg.grid_size = 4;
    cfg.test_records = {801};
    cfg.quiet = true;

    pipeline::cmd_ingest(cfg);
    CHECK(csv_rows(out / "beats.csv") > 500); // header + 2 x in-bounds beats
    CHECK(fs::exists(out / "ingest_summary.csv"));

    pipeline::cmd_resample(cfg);
    auto balanced = read_csv((out / "train_resampled.csv").string());
    auto counts = balanced.class_counts();
    REQUIRE(counts.size() == 8);
    const auto n = counts.begin()->second;
    for (const auto& [cls, c] : counts) CHECK(c == n);

    pipeline::cmd_train(cfg);
    CHECK(fs::exists(out / "model_nb.ecgi"));
    CHECK(fs::exists(out / "model_rfc.ecgi"));

    pipeline::cmd_eval_cv(cfg);
    CHECK(csv_rows(out / "cv_fold_scores.csv") == 1 + 2 * 2); // header + models x folds
    CHECK(fs::exists(out / "cv_confusion_rfc.csv"));
    CHECK(fs::exists(out / "cv_metrics.svg"));

    pipeline::cmd_eval_lgo(cfg);
    CHECK(fs::exists(out / "lgo_scores.csv"));
    CHECK(fs::exists(out / "lgo_class_histogram.csv"));

    pipeline::cmd_interpret(cfg, "pfi");
    CHECK(csv_rows(out / "pfi_rfc.csv") == 1 + kNumSegments);
    pipeline::cmd_interpret(cfg, "pdp");
    CHECK(csv_rows(out / "pdp_nb.csv") == 1 + kNumSegments * cfg.grid_size);
    pipeline::cmd_interpret(cfg, "shap");
    CHECK(csv_rows(out / "shap_rfc.csv") == 1 + 3);
    CHECK(fs::exists(out / "shap_rfc_summary.svg"));

    // gradcam needs a deep model; a shallow-only selection raises WrongKind
    CHECK_THROWS_AS(pipeline::cmd_interpret(cfg, "gradcam"), WrongKind);
    CHECK_THROWS_AS(pipeline::cmd_interpret(cfg, "mystery"), OutOfRange);

    pipeline::cmd_stats(cfg);
    CHECK(csv_rows(out / "ci_table.csv") == 1 + 4);
    CHECK(fs::exists(out / "wilcoxon_accuracy.csv"));
    CHECK(fs::exists(out / "kendall_pfi.csv"));

    pipeline::cmd_report(cfg);
    CHECK(fs::exists(out / "variance.csv"));
    CHECK(fs::exists(out / "variance.svg"));

    fs::remove_all(out);
}

TEST_CASE("svg charts carry their numbers next to them") {
    const auto out = fs::temp_directory_path() / "ecgi_test_svg";
    fs::create_directories(out);
    svg::bar_chart((out / "bars.svg").string(), "title", {"a", "b"}, {1.0, 2.0}, {0.1, 0.2},
                   "y");
    svg::heatmap((out / "heat.svg").string(), "title", {"r"}, {"c1", "c2"}, {{0.5, 1.5}});
    svg::Series s;
    s.label = "s";
    s.x = {0, 1, 2};
    s.y = {1, 0, 1};
    s.band_lo = {0.5, -0.5, 0.5};
    s.band_hi = {1.5, 0.5, 1.5};
    svg::line_plot((out / "line.svg").string(), "title", {s});
    svg::saliency_overlay((out / "overlay.svg").string(), "title",
                          std::vector<double>(220, 0.5), std::vector<double>(220, 0.25),
                          std::vector<double>(11, 0.5));
    for (const char* name : {"bars.svg", "heat.svg", "line.svg", "overlay.svg"}) {
        std::ifstream in(out / name);
        std::string content((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
        CHECK(content.rfind("<svg", 0) == 0);
        CHECK(content.find("</svg>") != std::string::npos);
    }
    fs::remove_all(out);
}
