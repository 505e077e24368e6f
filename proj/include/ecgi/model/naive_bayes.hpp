#pragma once

#include "ecgi/model/classifier.hpp"
#include "ecgi/model/io.hpp"

#include <cmath>

namespace ecgi::model {

// Gaussian naive Bayes over the 220 raw samples: per-class feature means and
// variances with a relative variance floor, class priors from frequencies.
class NaiveBayesModel final : public ClassifierModel {
public:
    ModelKind kind() const override { return ModelKind::NB; }
    bool trained() const override { return trained_; }

    void fit(const BeatDataset& train, const TrainConfig&) override {
        require_all_classes(train);
        mean_.resize(kNumClasses, kBeatLength);
        var_.resize(kNumClasses, kBeatLength);
        log_prior_.resize(1, kNumClasses);

        std::array<std::size_t, kNumClasses> counts{};
        for (std::size_t i = 0; i < train.size(); ++i) {
            const auto c = static_cast<std::size_t>(train.label(i) - 1);
            ++counts[c];
            const double* row = train.row(i);
            for (std::size_t f = 0; f < kBeatLength; ++f) {
                mean_(c, f) += row[f];
                var_(c, f) += row[f] * row[f];
            }
        }
        double max_var = 0;
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            const auto n = static_cast<double>(counts[c]);
            for (std::size_t f = 0; f < kBeatLength; ++f) {
                mean_(c, f) /= n;
                var_(c, f) = std::max(0.0, var_(c, f) / n - mean_(c, f) * mean_(c, f));
                max_var = std::max(max_var, var_(c, f));
            }
            log_prior_(0, c) = std::log(n / static_cast<double>(train.size()));
        }
        // floor keeps resampled duplicate rows from collapsing a variance to 0
        const double floor = std::max(1e-9 * max_var, 1e-300);
        for (std::size_t i = 0; i < var_.size(); ++i)
            var_.data()[i] = std::max(var_.data()[i], floor);
        trained_ = true;
    }

    Mat<double> predict_proba_rows(const double* beats, std::size_t n) const override {
        if (!trained_) throw UntrainedModel("predict: model was never fitted");
        Mat<double> out(n, nn::kClasses);
        std::array<double, kNumClasses> log_norm{};
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            double s = 0;
            for (std::size_t f = 0; f < kBeatLength; ++f)
                s += std::log(2.0 * 3.14159265358979323846 * var_(c, f));
            log_norm[c] = -0.5 * s + log_prior_(0, c);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = beats + i * kBeatLength;
            double logp[kNumClasses];
            double best = -1e300;
            for (std::size_t c = 0; c < kNumClasses; ++c) {
                double quad = 0;
                for (std::size_t f = 0; f < kBeatLength; ++f) {
                    const double d = row[f] - mean_(c, f);
                    quad += d * d / var_(c, f);
                }
                logp[c] = log_norm[c] - 0.5 * quad;
                best = std::max(best, logp[c]);
            }
            double sum = 0;
            for (std::size_t c = 0; c < kNumClasses; ++c) {
                logp[c] = std::exp(logp[c] - best);
                sum += logp[c];
            }
            out(i, 0) = 0.0; // class index 0 is never used
            for (std::size_t c = 0; c < kNumClasses; ++c) out(i, c + 1) = logp[c] / sum;
        }
        return out;
    }

    void save(const std::filesystem::path& path) const override {
        if (!trained_) throw UntrainedModel("save: model was never fitted");
        TensorWriter writer;
        writer.add("mean", mean_);
        writer.add("var", var_);
        writer.add("log_prior", log_prior_);
        writer.save(path, kind_tag(ModelKind::NB));
    }

    void load(const std::filesystem::path& path) override {
        const auto file = load_tensor_file(path);
        if (file.kind_tag != kind_tag(ModelKind::NB))
            throw SchemaError("model file holds a different model kind");
        mean_ = file.get("mean");
        var_ = file.get("var");
        log_prior_ = file.get("log_prior");
        trained_ = true;
    }

private:
    Mat<double> mean_, var_, log_prior_;
    bool trained_ = false;
};

} // namespace ecgi::model
