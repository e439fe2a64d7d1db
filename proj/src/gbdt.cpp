#include "tabrep/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tabrep {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// bin edges at feature quantiles; duplicates collapse so edges are strictly increasing
std::vector<double> feature_bin_edges(const FeatureMatrix& x, int feature, int bins) {
    std::vector<double> values(static_cast<size_t>(x.rows));
    for (int64_t r = 0; r < x.rows; ++r) values[static_cast<size_t>(r)] = x.at(r, feature);
    std::sort(values.begin(), values.end());
    std::vector<double> edges;
    for (int b = 1; b < bins; ++b) {
        const double q = static_cast<double>(b) / static_cast<double>(bins);
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        const double v = lo + 1 < values.size()
                             ? values[lo] * (1.0 - frac) + values[lo + 1] * frac
                             : values[lo];
        if (edges.empty() || v > edges.back()) edges.push_back(v);
    }
    return edges;
}

uint16_t bin_of(double v, const std::vector<double>& edges) {
    // first bin whose upper edge is >= v; values above all edges go last
    const auto it = std::lower_bound(edges.begin(), edges.end(), v);
    return static_cast<uint16_t>(it - edges.begin());
}

}  // namespace

double Gbdt::Tree::predict(const double* row) const {
    int at = 0;
    while (nodes[static_cast<size_t>(at)].feature >= 0) {
        const auto& n = nodes[static_cast<size_t>(at)];
        at = row[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<size_t>(at)].value;
}

Gbdt::Tree Gbdt::build_tree(const FeatureMatrix& x, const std::vector<uint16_t>& binned,
                            const std::vector<std::vector<double>>& edges,
                            const std::vector<double>& grad, const std::vector<double>& hess,
                            const GbdtConfig& cfg) const {
    Tree tree;
    struct Work {
        int node;
        std::vector<int64_t> samples;
        int depth;
    };
    std::vector<Work> queue;
    {
        std::vector<int64_t> all(static_cast<size_t>(x.rows));
        for (int64_t i = 0; i < x.rows; ++i) all[static_cast<size_t>(i)] = i;
        tree.nodes.push_back({});
        queue.push_back({0, std::move(all), 0});
    }

    while (!queue.empty()) {
        Work w = std::move(queue.back());
        queue.pop_back();

        double g_sum = 0, h_sum = 0;
        for (int64_t i : w.samples) {
            g_sum += grad[static_cast<size_t>(i)];
            h_sum += hess[static_cast<size_t>(i)];
        }
        auto make_leaf = [&] {
            tree.nodes[static_cast<size_t>(w.node)].feature = -1;
            tree.nodes[static_cast<size_t>(w.node)].value =
                -cfg.lr * g_sum / (h_sum + cfg.lambda);
        };
        if (w.depth >= cfg.depth ||
            static_cast<int>(w.samples.size()) < 2 * cfg.min_child_samples) {
            make_leaf();
            continue;
        }

        const double parent_score = g_sum * g_sum / (h_sum + cfg.lambda);
        double best_gain = 1e-12;
        int best_feature = -1;
        int best_bin = -1;

        std::vector<double> gh(2 * 64);
        std::vector<int64_t> cnt(64);
        for (int f = 0; f < x.cols; ++f) {
            const auto& fe = edges[static_cast<size_t>(f)];
            if (fe.empty()) continue;
            const int nb = static_cast<int>(fe.size()) + 1;
            gh.assign(static_cast<size_t>(2 * nb), 0.0);
            cnt.assign(static_cast<size_t>(nb), 0);
            for (int64_t i : w.samples) {
                const uint16_t b =
                    binned[static_cast<size_t>(i) * static_cast<size_t>(x.cols) +
                           static_cast<size_t>(f)];
                gh[2 * b] += grad[static_cast<size_t>(i)];
                gh[2 * b + 1] += hess[static_cast<size_t>(i)];
                ++cnt[b];
            }
            double gl = 0, hl = 0;
            int64_t nl = 0;
            for (int b = 0; b + 1 < nb; ++b) {
                gl += gh[static_cast<size_t>(2 * b)];
                hl += gh[static_cast<size_t>(2 * b + 1)];
                nl += cnt[static_cast<size_t>(b)];
                const int64_t nr = static_cast<int64_t>(w.samples.size()) - nl;
                if (nl < cfg.min_child_samples || nr < cfg.min_child_samples) continue;
                const double gr = g_sum - gl, hr = h_sum - hl;
                const double gain = gl * gl / (hl + cfg.lambda) + gr * gr / (hr + cfg.lambda) -
                                    parent_score;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_bin = b;
                }
            }
        }
        if (best_feature < 0) {
            make_leaf();
            continue;
        }

        std::vector<int64_t> left, right;
        for (int64_t i : w.samples) {
            const uint16_t b = binned[static_cast<size_t>(i) * static_cast<size_t>(x.cols) +
                                      static_cast<size_t>(best_feature)];
            (b <= best_bin ? left : right).push_back(i);
        }
        const int left_id = static_cast<int>(tree.nodes.size());
        const int right_id = left_id + 1;
        tree.nodes.push_back({});
        tree.nodes.push_back({});
        auto& node = tree.nodes[static_cast<size_t>(w.node)];
        node.feature = best_feature;
        node.threshold = edges[static_cast<size_t>(best_feature)][static_cast<size_t>(best_bin)];
        node.left = left_id;
        node.right = right_id;
        queue.push_back({left_id, std::move(left), w.depth + 1});
        queue.push_back({right_id, std::move(right), w.depth + 1});
    }
    return tree;
}

Gbdt Gbdt::fit_impl(const FeatureMatrix& x, const std::vector<double>& y, bool logistic,
                    const GbdtConfig& cfg) {
    if (x.rows == 0 || x.rows != static_cast<int64_t>(y.size()))
        throw std::invalid_argument("gbdt: feature/label size mismatch");
    Gbdt model;
    model.logistic_ = logistic;

    if (logistic) {
        double mean = 0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(y.size());
        mean = std::clamp(mean, 1e-6, 1.0 - 1e-6);
        model.base_ = std::log(mean / (1.0 - mean));
    } else {
        double mean = 0;
        for (double v : y) mean += v;
        model.base_ = mean / static_cast<double>(y.size());
    }

    std::vector<std::vector<double>> edges(static_cast<size_t>(x.cols));
    for (int f = 0; f < x.cols; ++f) edges[static_cast<size_t>(f)] = feature_bin_edges(x, f, cfg.bins);
    std::vector<uint16_t> binned(static_cast<size_t>(x.rows) * static_cast<size_t>(x.cols));
    for (int64_t r = 0; r < x.rows; ++r)
        for (int f = 0; f < x.cols; ++f)
            binned[static_cast<size_t>(r) * static_cast<size_t>(x.cols) + static_cast<size_t>(f)] =
                bin_of(x.at(r, f), edges[static_cast<size_t>(f)]);

    std::vector<double> raw(static_cast<size_t>(x.rows), model.base_);
    std::vector<double> grad(raw.size()), hess(raw.size());
    for (int round = 0; round < cfg.rounds; ++round) {
        for (size_t i = 0; i < raw.size(); ++i) {
            if (logistic) {
                const double p = sigmoid(raw[i]);
                grad[i] = p - y[i];
                hess[i] = std::max(p * (1.0 - p), 1e-12);
            } else {
                grad[i] = raw[i] - y[i];
                hess[i] = 1.0;
            }
        }
        Tree tree = model.build_tree(x, binned, edges, grad, hess, cfg);
        for (int64_t r = 0; r < x.rows; ++r)
            raw[static_cast<size_t>(r)] +=
                tree.predict(x.data.data() + static_cast<size_t>(r) * static_cast<size_t>(x.cols));
        model.trees_.push_back(std::move(tree));
    }
    return model;
}

Gbdt Gbdt::fit_regression(const FeatureMatrix& x, const std::vector<double>& y,
                          const GbdtConfig& cfg) {
    return fit_impl(x, y, false, cfg);
}

Gbdt Gbdt::fit_binary(const FeatureMatrix& x, const std::vector<int>& y01, const GbdtConfig& cfg) {
    std::vector<double> y(y01.size());
    for (size_t i = 0; i < y01.size(); ++i) {
        if (y01[i] != 0 && y01[i] != 1) throw std::invalid_argument("gbdt: labels must be 0/1");
        y[i] = static_cast<double>(y01[i]);
    }
    return fit_impl(x, y, true, cfg);
}

std::vector<double> Gbdt::predict_raw(const FeatureMatrix& x) const {
    std::vector<double> out(static_cast<size_t>(x.rows), base_);
    for (const auto& tree : trees_)
        for (int64_t r = 0; r < x.rows; ++r)
            out[static_cast<size_t>(r)] +=
                tree.predict(x.data.data() + static_cast<size_t>(r) * static_cast<size_t>(x.cols));
    return out;
}

std::vector<double> Gbdt::predict_proba(const FeatureMatrix& x) const {
    auto out = predict_raw(x);
    if (logistic_)
        for (auto& v : out) v = sigmoid(v);
    return out;
}

}  // namespace tabrep
