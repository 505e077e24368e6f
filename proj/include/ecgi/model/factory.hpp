#pragma once

#include "ecgi/model/deep.hpp"
#include "ecgi/model/forest.hpp"
#include "ecgi/model/naive_bayes.hpp"

#include <memory>

namespace ecgi::model {

inline std::unique_ptr<ClassifierModel> make_model(ModelKind kind) {
    switch (kind) {
        case ModelKind::NB: return std::make_unique<NaiveBayesModel>();
        case ModelKind::RFC: return std::make_unique<RandomForestModel>();
        case ModelKind::MLP: return std::make_unique<MlpModel>();
        case ModelKind::CNN: return std::make_unique<CnnModel>();
        case ModelKind::LSTM: return std::make_unique<LstmModel>();
    }
    throw OutOfRange("make_model: bad kind");
}

inline std::unique_ptr<ClassifierModel> load_model(const std::filesystem::path& path) {
    const auto file = load_tensor_file(path);
    for (ModelKind kind : {ModelKind::NB, ModelKind::RFC, ModelKind::MLP, ModelKind::CNN,
                           ModelKind::LSTM}) {
        if (kind_tag(kind) == file.kind_tag) {
            auto model = make_model(kind);
            model->load(path);
            return model;
        }
    }
    throw SchemaError("model file: unknown kind tag " + std::to_string(file.kind_tag));
}

} // namespace ecgi::model
