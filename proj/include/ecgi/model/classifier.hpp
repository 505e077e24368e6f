#pragma once

#include "ecgi/beat.hpp"
#include "ecgi/error.hpp"
#include "ecgi/mat.hpp"
#include "ecgi/nn/layers.hpp"

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace ecgi::model {

enum class ModelKind { NB, RFC, MLP, CNN, LSTM };

inline const char* kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::NB: return "nb";
        case ModelKind::RFC: return "rfc";
        case ModelKind::MLP: return "mlp";
        case ModelKind::CNN: return "cnn";
        case ModelKind::LSTM: return "lstm";
    }
    return "?";
}

inline ModelKind kind_from_name(const std::string& name) {
    if (name == "nb") return ModelKind::NB;
    if (name == "rfc") return ModelKind::RFC;
    if (name == "mlp") return ModelKind::MLP;
    if (name == "cnn") return ModelKind::CNN;
    if (name == "lstm") return ModelKind::LSTM;
    throw OutOfRange("unknown model kind '" + name + "'");
}

inline std::uint32_t kind_tag(ModelKind k) { return static_cast<std::uint32_t>(k) + 1; }

struct TrainConfig {
    nn::AdamConfig adam;     // lr 0.001, beta 0.9/0.999, eps 1e-8
    std::size_t epochs = 10;
    std::size_t batch = 64;
    std::uint64_t seed = 0;
    bool verbose = false;
};

// Paper hyper-parameters per model kind.
inline TrainConfig default_config(ModelKind kind, std::uint64_t seed = 0) {
    TrainConfig cfg;
    cfg.seed = seed;
    switch (kind) {
        case ModelKind::CNN:
            cfg.epochs = 10;
            cfg.batch = 64;
            break;
        case ModelKind::LSTM:
            cfg.epochs = 10;
            cfg.batch = 256;
            break;
        case ModelKind::MLP:
            cfg.epochs = 100; // max_iter
            cfg.batch = 200;
            break;
        default:
            break; // NB and RFC ignore the gradient settings
    }
    return cfg;
}

// The trace of one forward pass a saliency method needs: the final feature
// map (time x 9), the pre-softmax scores, and the probabilities.
struct ForwardTrace {
    Mat<double> feature_map;
    std::array<double, nn::kClasses> logits{};
    std::array<double, nn::kClasses> probs{};
};

// Uniform fit / predict-probabilities contract. predict_proba rows sum to
// one over 9 outputs; output 0 never carries mass.
class ClassifierModel {
public:
    virtual ~ClassifierModel() = default;

    virtual ModelKind kind() const = 0;
    virtual void fit(const BeatDataset& train, const TrainConfig& cfg) = 0;
    // beats: `n` contiguous rows of 220 samples each.
    virtual Mat<double> predict_proba_rows(const double* beats, std::size_t n) const = 0;
    virtual void save(const std::filesystem::path& path) const = 0;
    virtual void load(const std::filesystem::path& path) = 0;
    virtual bool trained() const = 0;

    Mat<double> predict_proba(const Mat<double>& beats) const {
        return predict_proba_rows(beats.data(), beats.rows());
    }

    Mat<double> predict_proba(const BeatDataset& dataset) const {
        return predict_proba_rows(dataset.size() ? dataset.row(0) : nullptr, dataset.size());
    }

    std::vector<int> predict_from_proba(const Mat<double>& proba) const {
        std::vector<int> labels(proba.rows());
        for (std::size_t r = 0; r < proba.rows(); ++r) {
            int best = 1;
            for (int c = 2; c < static_cast<int>(nn::kClasses); ++c)
                if (proba(r, static_cast<std::size_t>(c)) >
                    proba(r, static_cast<std::size_t>(best)))
                    best = c;
            labels[r] = best;
        }
        return labels;
    }

    std::vector<int> predict(const Mat<double>& beats) const {
        return predict_from_proba(predict_proba(beats));
    }

    std::vector<int> predict(const BeatDataset& dataset) const {
        return predict_from_proba(predict_proba(dataset));
    }

protected:
    static void require_all_classes(const BeatDataset& train) {
        if (train.empty()) throw MissingClass("fit: empty training set");
        std::array<bool, kNumClasses + 1> seen{};
        for (std::size_t i = 0; i < train.size(); ++i) {
            const int c = train.label(i);
            if (c >= 1 && c <= kNumClasses) seen[static_cast<std::size_t>(c)] = true;
        }
        for (int c = 1; c <= kNumClasses; ++c)
            if (!seen[static_cast<std::size_t>(c)])
                throw MissingClass("fit: class " + std::to_string(c) + " missing from training set");
    }
};

// Models that expose a final feature map for gradient-based saliency.
class SaliencyCapable {
public:
    virtual ~SaliencyCapable() = default;
    // Runs one beat forward and caches the pass; the returned trace belongs
    // to that cached state.
    virtual ForwardTrace forward_trace(const double* beat) const = 0;
    // d(logit class_id)/d(feature map) for the most recent trace.
    virtual Mat<double> grad_wrt_activation(const ForwardTrace& trace, int class_id) const = 0;
};

} // namespace ecgi::model
