#pragma once

#include "ecgi/model/classifier.hpp"
#include "ecgi/model/io.hpp"
#include "ecgi/nn/nets.hpp"

#include <cmath>
#include <cstdio>
#include <mutex>
#include <vector>

namespace ecgi::model {

// ---------------------------------------------------------------------------
// Shared wrapper for the gradient-trained nets. The runtime scalar is float;
// saved parameters are widened to f64 and narrow back exactly on load, so a
// save/load round trip reproduces predictions bit for bit.
//
// The nets reuse internal buffers, so inference takes a lock; concurrent
// readers are safe, just serialized per model instance.
// ---------------------------------------------------------------------------
template <typename Net, ModelKind Kind>
class DeepModel : public ClassifierModel {
public:
    ModelKind kind() const override { return Kind; }
    bool trained() const override { return trained_; }
    const std::vector<double>& loss_history() const { return loss_history_; }

    void fit(const BeatDataset& train, const TrainConfig& cfg) override {
        require_all_classes(train);
        net_.init(cfg.seed);
        loss_history_.clear();

        std::vector<std::size_t> order(train.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng = Rng(cfg.seed).spawn(1); // stream 0 is weight init

        nn::SoftmaxCrossEntropy<float> loss;
        std::vector<const double*> rows(cfg.batch);
        std::vector<int> targets(cfg.batch);
        Mat<float> probs, dlogits;
        std::size_t step = 0;

        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            shuffle_rng.shuffle(order);
            double epoch_loss = 0;
            std::size_t batches = 0;
            for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
                const std::size_t b = std::min(cfg.batch, order.size() - start);
                rows.resize(b);
                targets.resize(b);
                for (std::size_t i = 0; i < b; ++i) {
                    rows[i] = train.row(order[start + i]);
                    targets[i] = train.label(order[start + i]);
                }
                net_.load_batch(rows.data(), b);
                const auto& logits = net_.forward(/*training=*/true);
                const double batch_loss = loss.forward(logits, targets, probs);
                if (!std::isfinite(batch_loss))
                    throw NonFinite("fit: loss diverged at epoch " + std::to_string(epoch));
                loss.backward(probs, targets, dlogits);
                net_.backward(dlogits);
                net_.update(cfg.adam, ++step);
                epoch_loss += batch_loss;
                ++batches;
            }
            loss_history_.push_back(epoch_loss / static_cast<double>(batches));
            if (cfg.verbose)
                std::fprintf(stderr, "[%s] epoch %zu/%zu loss %.4f\n", kind_name(Kind), epoch + 1,
                             cfg.epochs, loss_history_.back());
        }
        trained_ = true;
    }

    Mat<double> predict_proba_rows(const double* beats, std::size_t n) const override {
        if (!trained_) throw UntrainedModel("predict: model was never fitted");
        std::lock_guard<std::mutex> lock(infer_mutex_);
        Mat<double> out(n, nn::kClasses);
        std::vector<const double*> rows;
        constexpr std::size_t kChunk = 256;
        for (std::size_t start = 0; start < n; start += kChunk) {
            const std::size_t b = std::min(kChunk, n - start);
            rows.resize(b);
            for (std::size_t i = 0; i < b; ++i) rows[i] = beats + (start + i) * kBeatLength;
            net_.load_batch(rows.data(), b);
            const auto& logits = net_.forward(/*training=*/false);
            for (std::size_t i = 0; i < b; ++i) {
                double z[nn::kClasses];
                for (std::size_t c = 0; c < nn::kClasses; ++c)
                    z[c] = static_cast<double>(logits(i, c));
                nn::softmax_row(z, nn::kClasses);
                for (std::size_t c = 0; c < nn::kClasses; ++c) out(start + i, c) = z[c];
            }
        }
        return out;
    }

    void save(const std::filesystem::path& path) const override {
        if (!trained_) throw UntrainedModel("save: model was never fitted");
        TensorWriter writer;
        const_cast<Net&>(net_).for_each_tensor(
            [&](const char* name, const auto& tensor) { writer.add(name, tensor); });
        writer.save(path, kind_tag(Kind));
    }

    void load(const std::filesystem::path& path) override {
        const auto file = load_tensor_file(path);
        if (file.kind_tag != kind_tag(Kind))
            throw SchemaError("model file holds a different model kind");
        net_.for_each_tensor(
            [&](const char* name, auto& tensor) { file.fill(name, tensor); });
        trained_ = true;
    }

protected:
    mutable Net net_;
    mutable std::mutex infer_mutex_;
    bool trained_ = false;
    std::vector<double> loss_history_;
};

class MlpModel final : public DeepModel<nn::MlpNet<float>, ModelKind::MLP> {};

// CNN and LSTM additionally expose their final feature maps for saliency.
template <typename Net, ModelKind Kind>
class DeepSaliencyModel : public DeepModel<Net, Kind>, public SaliencyCapable {
public:
    ForwardTrace forward_trace(const double* beat) const override {
        if (!this->trained_) throw UntrainedModel("forward_trace: model was never fitted");
        std::lock_guard<std::mutex> lock(this->infer_mutex_);
        const double* rows[1] = {beat};
        this->net_.load_batch(rows, 1);
        const auto& logits = this->net_.forward(/*training=*/false);
        ForwardTrace trace;
        const auto map = this->net_.saliency_map();
        trace.feature_map.resize(map.rows(), map.cols());
        for (std::size_t i = 0; i < map.size(); ++i)
            trace.feature_map.data()[i] = static_cast<double>(map.data()[i]);
        for (std::size_t c = 0; c < nn::kClasses; ++c) {
            trace.logits[c] = static_cast<double>(logits(0, c));
            trace.probs[c] = trace.logits[c];
        }
        nn::softmax_row(trace.probs.data(), nn::kClasses);
        return trace;
    }

    Mat<double> grad_wrt_activation(const ForwardTrace&, int class_id) const override {
        if (class_id < 0 || class_id >= static_cast<int>(nn::kClasses))
            throw OutOfRange("grad_wrt_activation: class id " + std::to_string(class_id));
        std::lock_guard<std::mutex> lock(this->infer_mutex_);
        const auto grad = this->net_.saliency_grad(class_id);
        Mat<double> out(grad.rows(), grad.cols());
        for (std::size_t i = 0; i < grad.size(); ++i)
            out.data()[i] = static_cast<double>(grad.data()[i]);
        return out;
    }
};

class CnnModel final : public DeepSaliencyModel<nn::CnnNet<float>, ModelKind::CNN> {};
class LstmModel final : public DeepSaliencyModel<nn::LstmNet<float>, ModelKind::LSTM> {};

} // namespace ecgi::model
