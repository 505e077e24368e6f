#pragma once

#include "ecgi/model/classifier.hpp"
#include "ecgi/model/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

namespace ecgi::model {

// ---------------------------------------------------------------------------
// Random forest: 10 trees, depth <= 10, Gini splits, bootstrapped rows,
// sqrt-of-features candidates per node. Leaves store class frequencies and
// predict_proba averages them across trees.
// ---------------------------------------------------------------------------
class RandomForestModel final : public ClassifierModel {
    struct Node {
        int feature = -1; // -1 marks a leaf
        double threshold = 0;
        int left = -1, right = -1;
        std::array<double, kNumClasses> dist{};
    };

    struct Tree {
        std::vector<Node> nodes;

        const std::array<double, kNumClasses>& predict(const double* row) const {
            int at = 0;
            while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
                const auto& n = nodes[static_cast<std::size_t>(at)];
                at = row[n.feature] <= n.threshold ? n.left : n.right;
            }
            return nodes[static_cast<std::size_t>(at)].dist;
        }
    };

public:
    static constexpr std::size_t kTrees = 10;
    static constexpr std::size_t kMaxDepth = 10;

    ModelKind kind() const override { return ModelKind::RFC; }
    bool trained() const override { return !trees_.empty(); }

    void fit(const BeatDataset& train, const TrainConfig& cfg) override {
        require_all_classes(train);
        trees_.clear();
        trees_.resize(kTrees);
        const Rng master(cfg.seed);
        const auto features_per_split =
            static_cast<std::size_t>(std::sqrt(static_cast<double>(kBeatLength)));
        for (std::size_t t = 0; t < kTrees; ++t) {
            Rng rng = master.spawn(t);
            std::vector<std::size_t> rows(train.size());
            for (auto& r : rows) r = rng.index(train.size()); // bootstrap
            build_tree(trees_[t], train, std::move(rows), features_per_split, rng);
        }
    }

    Mat<double> predict_proba_rows(const double* beats, std::size_t n) const override {
        if (trees_.empty()) throw UntrainedModel("predict: model was never fitted");
        Mat<double> out(n, nn::kClasses);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = beats + i * kBeatLength;
            std::array<double, kNumClasses> acc{};
            for (const auto& tree : trees_) {
                const auto& dist = tree.predict(row);
                for (std::size_t c = 0; c < kNumClasses; ++c) acc[c] += dist[c];
            }
            for (std::size_t c = 0; c < kNumClasses; ++c)
                out(i, c + 1) = acc[c] / static_cast<double>(trees_.size());
        }
        return out;
    }

    void save(const std::filesystem::path& path) const override {
        if (trees_.empty()) throw UntrainedModel("save: model was never fitted");
        TensorWriter writer;
        for (std::size_t t = 0; t < trees_.size(); ++t) {
            const auto& nodes = trees_[t].nodes;
            Mat<double> flat(nodes.size(), 4 + kNumClasses);
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                flat(i, 0) = nodes[i].feature;
                flat(i, 1) = nodes[i].threshold;
                flat(i, 2) = nodes[i].left;
                flat(i, 3) = nodes[i].right;
                for (std::size_t c = 0; c < kNumClasses; ++c) flat(i, 4 + c) = nodes[i].dist[c];
            }
            writer.add("tree" + std::to_string(t), flat);
        }
        writer.save(path, kind_tag(ModelKind::RFC));
    }

    void load(const std::filesystem::path& path) override {
        const auto file = load_tensor_file(path);
        if (file.kind_tag != kind_tag(ModelKind::RFC))
            throw SchemaError("model file holds a different model kind");
        trees_.clear();
        for (std::size_t t = 0;; ++t) {
            const auto it = file.tensors.find("tree" + std::to_string(t));
            if (it == file.tensors.end()) break;
            const auto& flat = it->second;
            Tree tree;
            tree.nodes.resize(flat.rows());
            for (std::size_t i = 0; i < flat.rows(); ++i) {
                tree.nodes[i].feature = static_cast<int>(flat(i, 0));
                tree.nodes[i].threshold = flat(i, 1);
                tree.nodes[i].left = static_cast<int>(flat(i, 2));
                tree.nodes[i].right = static_cast<int>(flat(i, 3));
                for (std::size_t c = 0; c < kNumClasses; ++c)
                    tree.nodes[i].dist[c] = flat(i, 4 + c);
            }
            trees_.push_back(std::move(tree));
        }
        if (trees_.empty()) throw SchemaError("model file holds no trees");
    }

private:
    static double gini(const std::array<double, kNumClasses>& counts, double total) {
        double g = 1.0;
        for (double c : counts) {
            const double p = c / total;
            g -= p * p;
        }
        return g;
    }

    static void build_tree(Tree& tree, const BeatDataset& data, std::vector<std::size_t> rows,
                           std::size_t features_per_split, Rng& rng) {
        struct Work {
            int node;
            std::size_t begin, end, depth;
        };
        tree.nodes.clear();
        tree.nodes.emplace_back();
        std::vector<Work> stack{{0, 0, rows.size(), 0}};
        std::vector<int> feature_pool(kBeatLength);
        std::iota(feature_pool.begin(), feature_pool.end(), 0);
        std::vector<std::pair<double, int>> sorted; // (value, label)

        while (!stack.empty()) {
            const Work work = stack.back();
            stack.pop_back();
            auto& node = tree.nodes[static_cast<std::size_t>(work.node)];

            std::array<double, kNumClasses> counts{};
            for (std::size_t i = work.begin; i < work.end; ++i)
                counts[static_cast<std::size_t>(data.label(rows[i]) - 1)] += 1.0;
            const auto total = static_cast<double>(work.end - work.begin);
            const double node_gini = gini(counts, total);

            auto make_leaf = [&] {
                node.feature = -1;
                for (std::size_t c = 0; c < kNumClasses; ++c) node.dist[c] = counts[c] / total;
            };
            if (work.depth >= kMaxDepth || total < 2 || node_gini == 0.0) {
                make_leaf();
                continue;
            }

            // sample distinct candidate features
            for (std::size_t i = 0; i < features_per_split; ++i)
                std::swap(feature_pool[i],
                          feature_pool[i + rng.index(feature_pool.size() - i)]);

            int best_feature = -1;
            double best_threshold = 0, best_score = node_gini;
            for (std::size_t fi = 0; fi < features_per_split; ++fi) {
                const int feature = feature_pool[fi];
                sorted.clear();
                for (std::size_t i = work.begin; i < work.end; ++i)
                    sorted.emplace_back(data.row(rows[i])[feature], data.label(rows[i]) - 1);
                std::sort(sorted.begin(), sorted.end());
                std::array<double, kNumClasses> left{};
                auto right = counts;
                for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                    const auto cls = static_cast<std::size_t>(sorted[i].second);
                    left[cls] += 1.0;
                    right[cls] -= 1.0;
                    if (sorted[i].first == sorted[i + 1].first) continue;
                    const auto nl = static_cast<double>(i + 1);
                    const double nr = total - nl;
                    const double score = (nl * gini(left, nl) + nr * gini(right, nr)) / total;
                    if (score < best_score - 1e-12) {
                        best_score = score;
                        best_feature = feature;
                        best_threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
                    }
                }
            }
            if (best_feature < 0) {
                make_leaf();
                continue;
            }

            const auto mid = std::partition(
                rows.begin() + static_cast<std::ptrdiff_t>(work.begin),
                rows.begin() + static_cast<std::ptrdiff_t>(work.end),
                [&](std::size_t r) { return data.row(r)[best_feature] <= best_threshold; });
            const auto split = static_cast<std::size_t>(mid - rows.begin());
            if (split == work.begin || split == work.end) {
                make_leaf();
                continue;
            }

            node.feature = best_feature;
            node.threshold = best_threshold;
            node.left = static_cast<int>(tree.nodes.size());
            node.right = node.left + 1;
            const int left_node = node.left, right_node = node.right;
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            stack.push_back({left_node, work.begin, split, work.depth + 1});
            stack.push_back({right_node, split, work.end, work.depth + 1});
        }
    }

    std::vector<Tree> trees_;
};

} // namespace ecgi::model
