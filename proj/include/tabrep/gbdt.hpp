#pragma once

#include <cstdint>
#include <vector>

namespace tabrep {

// Row-major feature matrix for the downstream models.
struct FeatureMatrix {
    int64_t rows = 0;
    int cols = 0;
    std::vector<double> data;

    double at(int64_t r, int c) const {
        return data[static_cast<size_t>(r) * static_cast<size_t>(cols) + static_cast<size_t>(c)];
    }
    double& at(int64_t r, int c) {
        return data[static_cast<size_t>(r) * static_cast<size_t>(cols) + static_cast<size_t>(c)];
    }
};

struct GbdtConfig {
    int rounds = 200;
    int depth = 3;
    double lr = 0.1;
    int bins = 32;
    double lambda = 1.0;        // L2 on leaf weights
    int min_child_samples = 5;
};

// Gradient-boosted depth-limited trees with histogram split finding and
// Newton leaf weights. Squared error for regression, logistic for binary;
// multiclass is handled one-vs-rest by the caller.
class Gbdt {
public:
    static Gbdt fit_regression(const FeatureMatrix& x, const std::vector<double>& y,
                               const GbdtConfig& cfg = {});
    static Gbdt fit_binary(const FeatureMatrix& x, const std::vector<int>& y01,
                           const GbdtConfig& cfg = {});

    // base score plus tree ensemble output (log-odds for binary)
    std::vector<double> predict_raw(const FeatureMatrix& x) const;
    std::vector<double> predict_proba(const FeatureMatrix& x) const;

private:
    struct Node {
        int feature = -1;      // -1 marks a leaf
        double threshold = 0;  // go left when value <= threshold
        int left = -1, right = -1;
        double value = 0;      // leaf weight (already scaled by lr)
    };
    struct Tree {
        std::vector<Node> nodes;
        double predict(const double* row) const;
    };

    static Gbdt fit_impl(const FeatureMatrix& x, const std::vector<double>& y, bool logistic,
                         const GbdtConfig& cfg);
    Tree build_tree(const FeatureMatrix& x, const std::vector<uint16_t>& binned,
                    const std::vector<std::vector<double>>& edges, const std::vector<double>& grad,
                    const std::vector<double>& hess, const GbdtConfig& cfg) const;

    double base_ = 0.0;
    bool logistic_ = false;
    std::vector<Tree> trees_;
};

}  // namespace tabrep
