#include "tabrep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "tabrep/gbdt.hpp"
#include "tabrep/io.hpp"
#include "tabrep/parallel.hpp"
#include "tabrep/rng.hpp"

namespace tabrep {

double kst(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("kst: empty sample");
    std::vector<double> sa(a), sb(b);
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
    size_t ia = 0, ib = 0;
    double sup = 0.0;
    while (ia < sa.size() && ib < sb.size()) {
        const double x = std::min(sa[ia], sb[ib]);
        while (ia < sa.size() && sa[ia] <= x) ++ia;
        while (ib < sb.size() && sb[ib] <= x) ++ib;
        sup = std::max(sup, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    return sup;
}

double tvd(const std::vector<int64_t>& counts_a, const std::vector<int64_t>& counts_b) {
    if (counts_a.size() != counts_b.size())
        throw std::invalid_argument("tvd: count vectors must align");
    int64_t na = 0, nb = 0;
    for (int64_t c : counts_a) na += c;
    for (int64_t c : counts_b) nb += c;
    if (na == 0 || nb == 0) throw std::invalid_argument("tvd: empty sample");
    double acc = 0.0;
    for (size_t i = 0; i < counts_a.size(); ++i)
        acc += std::abs(static_cast<double>(counts_a[i]) / static_cast<double>(na) -
                        static_cast<double>(counts_b[i]) / static_cast<double>(nb));
    return 0.5 * acc;
}

double tvd_indices(const std::vector<int32_t>& a, const std::vector<int32_t>& b, int k) {
    std::vector<int64_t> ca(static_cast<size_t>(k), 0), cb(static_cast<size_t>(k), 0);
    for (int32_t v : a) ++ca.at(static_cast<size_t>(v));
    for (int32_t v : b) ++cb.at(static_cast<size_t>(v));
    return tvd(ca, cb);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("pearson: need two aligned samples");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0 || syy <= 0) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson_score(const std::vector<double>& x_real, const std::vector<double>& y_real,
                     const std::vector<double>& x_syn, const std::vector<double>& y_syn) {
    return 0.5 * std::abs(pearson(x_real, y_real) - pearson(x_syn, y_syn));
}

double contingency_score(const std::vector<int32_t>& a1, const std::vector<int32_t>& a2,
                         const std::vector<int32_t>& b1, const std::vector<int32_t>& b2, int k1,
                         int k2) {
    if (a1.size() != a2.size() || b1.size() != b2.size())
        throw std::invalid_argument("contingency: pair columns must align");
    if (a1.empty() || b1.empty()) throw std::invalid_argument("contingency: empty sample");
    std::vector<double> pa(static_cast<size_t>(k1) * static_cast<size_t>(k2), 0.0);
    std::vector<double> pb(pa.size(), 0.0);
    for (size_t i = 0; i < a1.size(); ++i)
        pa.at(static_cast<size_t>(a1[i]) * static_cast<size_t>(k2) + static_cast<size_t>(a2[i])) +=
            1.0 / static_cast<double>(a1.size());
    for (size_t i = 0; i < b1.size(); ++i)
        pb.at(static_cast<size_t>(b1[i]) * static_cast<size_t>(k2) + static_cast<size_t>(b2[i])) +=
            1.0 / static_cast<double>(b1.size());
    double acc = 0.0;
    for (size_t i = 0; i < pa.size(); ++i) acc += std::abs(pa[i] - pb[i]);
    return 0.5 * acc;
}

std::vector<double> quantile_bin_edges(const std::vector<double>& values, int bins) {
    if (bins < 2) throw std::invalid_argument("binning: need at least 2 bins");
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    for (int b = 1; b < bins; ++b) {
        const double pos = static_cast<double>(b) / static_cast<double>(bins) *
                           static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        const double v = lo + 1 < sorted.size()
                             ? sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
                             : sorted[lo];
        if (edges.empty() || v > edges.back()) edges.push_back(v);
    }
    return edges;
}

std::vector<int32_t> digitize(const std::vector<double>& values, const std::vector<double>& edges) {
    std::vector<int32_t> out(values.size());
    for (size_t i = 0; i < values.size(); ++i) {
        const auto it = std::lower_bound(edges.begin(), edges.end(), values[i]);
        out[i] = static_cast<int32_t>(it - edges.begin());
    }
    return out;
}

namespace {

void require_same_schema(const Table& a, const Table& b, const char* what) {
    if (!(a.schema() == b.schema()))
        throw std::invalid_argument(std::string(what) + ": tables have different schemas");
}

}  // namespace

std::vector<double> column_density_scores(const Table& real, const Table& syn) {
    require_same_schema(real, syn, "cde");
    std::vector<double> scores;
    for (int j = 0; j < real.n_numeric(); ++j)
        scores.push_back(1.0 - kst(real.numeric_column(j), syn.numeric_column(j)));
    for (int j = 0; j < real.n_categorical(); ++j) {
        const int k = real.schema()
                          .columns[static_cast<size_t>(real.categorical_columns()[static_cast<size_t>(j)])]
                          .cardinality();
        scores.push_back(1.0 - tvd_indices(real.categorical_column(j), syn.categorical_column(j), k));
    }
    return scores;
}

double mean_cde(const Table& real, const Table& syn) {
    const auto scores = column_density_scores(real, syn);
    if (scores.empty()) throw std::invalid_argument("cde: table has no columns");
    double acc = 0.0;
    for (double s : scores) acc += s;
    return acc / static_cast<double>(scores.size());
}

double pcc_score(const Table& real, const Table& syn, const BinningSpec& binning) {
    require_same_schema(real, syn, "pcc");
    const int dn = real.n_numeric(), dc = real.n_categorical();
    const int total = dn + dc;
    if (total < 2) return 1.0;  // no pairs to compare

    // cache binned views of numeric columns (edges from the real split)
    std::vector<std::vector<int32_t>> real_binned(static_cast<size_t>(dn));
    std::vector<std::vector<int32_t>> syn_binned(static_cast<size_t>(dn));
    std::vector<int> bin_count(static_cast<size_t>(dn));
    for (int j = 0; j < dn; ++j) {
        const auto edges = quantile_bin_edges(real.numeric_column(j), binning.bins);
        real_binned[static_cast<size_t>(j)] = digitize(real.numeric_column(j), edges);
        syn_binned[static_cast<size_t>(j)] = digitize(syn.numeric_column(j), edges);
        bin_count[static_cast<size_t>(j)] = static_cast<int>(edges.size()) + 1;
    }
    auto card = [&](const Table& t, int cat_block) {
        return t.schema()
            .columns[static_cast<size_t>(t.categorical_columns()[static_cast<size_t>(cat_block)])]
            .cardinality();
    };

    double acc = 0.0;
    int64_t pairs = 0;
    for (int a = 0; a < total; ++a) {
        for (int b = a + 1; b < total; ++b) {
            double d;
            if (a < dn && b < dn) {
                d = pearson_score(real.numeric_column(a), real.numeric_column(b),
                                  syn.numeric_column(a), syn.numeric_column(b));
            } else if (a < dn) {
                const int cb = b - dn;
                d = contingency_score(real_binned[static_cast<size_t>(a)],
                                      real.categorical_column(cb),
                                      syn_binned[static_cast<size_t>(a)],
                                      syn.categorical_column(cb), bin_count[static_cast<size_t>(a)],
                                      card(real, cb));
            } else {
                const int ca = a - dn, cb = b - dn;
                d = contingency_score(real.categorical_column(ca), real.categorical_column(cb),
                                      syn.categorical_column(ca), syn.categorical_column(cb),
                                      card(real, ca), card(real, cb));
            }
            acc += d;
            ++pairs;
        }
    }
    return 1.0 - acc / static_cast<double>(pairs);
}

double auc_score(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("auc: scores/labels mismatch");
    std::vector<size_t> order(scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    int64_t n_pos = 0, n_neg = 0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (size_t t = i; t < j; ++t) {
            if (labels[order[t]] == 1) {
                rank_sum_pos += midrank;
                ++n_pos;
            } else {
                ++n_neg;
            }
        }
        i = j;
    }
    if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc: need both classes");
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

// numeric columns standardized on the combined sample, categoricals one-hot
FeatureMatrix detection_features(const Table& a, const Table& b) {
    const int dn = a.n_numeric(), dc = a.n_categorical();
    int width = dn;
    std::vector<int> cards(static_cast<size_t>(dc));
    for (int j = 0; j < dc; ++j) {
        cards[static_cast<size_t>(j)] =
            a.schema()
                .columns[static_cast<size_t>(a.categorical_columns()[static_cast<size_t>(j)])]
                .cardinality();
        width += cards[static_cast<size_t>(j)];
    }
    const int64_t n = a.n_rows() + b.n_rows();

    std::vector<double> mean(static_cast<size_t>(dn), 0.0), sd(static_cast<size_t>(dn), 0.0);
    for (int j = 0; j < dn; ++j) {
        double m = 0;
        for (int64_t r = 0; r < a.n_rows(); ++r) m += a.num(r, j);
        for (int64_t r = 0; r < b.n_rows(); ++r) m += b.num(r, j);
        m /= static_cast<double>(n);
        double v = 0;
        for (int64_t r = 0; r < a.n_rows(); ++r) v += (a.num(r, j) - m) * (a.num(r, j) - m);
        for (int64_t r = 0; r < b.n_rows(); ++r) v += (b.num(r, j) - m) * (b.num(r, j) - m);
        mean[static_cast<size_t>(j)] = m;
        sd[static_cast<size_t>(j)] = std::sqrt(v / static_cast<double>(n));
    }

    FeatureMatrix x;
    x.rows = n;
    x.cols = width;
    x.data.assign(static_cast<size_t>(n) * static_cast<size_t>(width), 0.0);
    auto fill = [&](const Table& t, int64_t row0) {
        for (int64_t r = 0; r < t.n_rows(); ++r) {
            for (int j = 0; j < dn; ++j) {
                const double s = sd[static_cast<size_t>(j)];
                x.at(row0 + r, j) = s > 0 ? (t.num(r, j) - mean[static_cast<size_t>(j)]) / s : 0.0;
            }
            int offset = dn;
            for (int j = 0; j < dc; ++j) {
                x.at(row0 + r, offset + t.cat(r, j)) = 1.0;
                offset += cards[static_cast<size_t>(j)];
            }
        }
    };
    fill(a, 0);
    fill(b, a.n_rows());
    return x;
}

// full-batch gradient descent on L2-regularized logistic loss
std::vector<double> logistic_fit(const FeatureMatrix& x, const std::vector<int>& y,
                                 const std::vector<int64_t>& rows, int iters, double l2) {
    std::vector<double> w(static_cast<size_t>(x.cols) + 1, 0.0);  // bias last
    const double n = static_cast<double>(rows.size());
    // mean squared row norm bounds the logistic Hessian; scales a stable step
    double msn = 0.0;
    for (int64_t r : rows) {
        double s = 1.0;
        for (int c = 0; c < x.cols; ++c) s += x.at(r, c) * x.at(r, c);
        msn += s;
    }
    msn /= n;
    const double lr = 4.0 / msn;

    std::vector<double> grad(w.size());
    for (int it = 0; it < iters; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (int64_t r : rows) {
            double z = w.back();
            for (int c = 0; c < x.cols; ++c) z += w[static_cast<size_t>(c)] * x.at(r, c);
            const double p = 1.0 / (1.0 + std::exp(-z));
            const double d = p - static_cast<double>(y[static_cast<size_t>(r)]);
            for (int c = 0; c < x.cols; ++c) grad[static_cast<size_t>(c)] += d * x.at(r, c);
            grad.back() += d;
        }
        for (size_t c = 0; c + 1 < w.size(); ++c)
            w[c] -= lr * (grad[c] / n + l2 * w[c]);
        w.back() -= lr * grad.back() / n;
    }
    return w;
}

double logistic_score(const FeatureMatrix& x, const std::vector<double>& w, int64_t row) {
    double z = w.back();
    for (int c = 0; c < x.cols; ++c) z += w[static_cast<size_t>(c)] * x.at(row, c);
    return z;
}

}  // namespace

double c2st(const Table& real, const Table& syn, uint64_t seed) {
    require_same_schema(real, syn, "c2st");
    if (real.n_rows() < 50 || syn.n_rows() < 50)
        throw std::invalid_argument("c2st: need at least 50 rows per side");

    const FeatureMatrix x = detection_features(real, syn);
    std::vector<int> y(static_cast<size_t>(x.rows), 0);
    for (int64_t r = 0; r < real.n_rows(); ++r) y[static_cast<size_t>(r)] = 1;

    std::vector<int64_t> order(static_cast<size_t>(x.rows));
    for (int64_t i = 0; i < x.rows; ++i) order[static_cast<size_t>(i)] = i;
    deterministic_shuffle(order, seed, /*stream=*/41);

    constexpr int kFolds = 5;
    std::vector<double> oof(static_cast<size_t>(x.rows), 0.0);
    std::vector<std::vector<int64_t>> folds(kFolds);
    for (size_t i = 0; i < order.size(); ++i)
        folds[i % kFolds].push_back(order[i]);

    std::vector<std::vector<int64_t>> train_rows(kFolds);
    for (int f = 0; f < kFolds; ++f)
        for (int g = 0; g < kFolds; ++g)
            if (g != f)
                train_rows[static_cast<size_t>(f)].insert(train_rows[static_cast<size_t>(f)].end(),
                                                          folds[static_cast<size_t>(g)].begin(),
                                                          folds[static_cast<size_t>(g)].end());

    parallel_for(kFolds, [&](size_t f) {
        const auto w = logistic_fit(x, y, train_rows[f], /*iters=*/500, /*l2=*/1e-3);
        for (int64_t r : folds[f]) oof[static_cast<size_t>(r)] = logistic_score(x, w, r);
    });

    const double auc = auc_score(oof, y);
    // detectability is symmetric in the labeling; folding AUC below 0.5 keeps
    // the score inside [0, 1]
    return std::max(0.0, 1.0 - 2.0 * std::abs(auc - 0.5));
}

namespace {

// squared feature-standardized distance; categorical mismatches count like a
// one-hot coordinate pair
struct MiaSpace {
    std::vector<double> mean, sd;

    static MiaSpace fit(const Table& queries) {
        MiaSpace s;
        const int dn = queries.n_numeric();
        s.mean.assign(static_cast<size_t>(dn), 0.0);
        s.sd.assign(static_cast<size_t>(dn), 0.0);
        for (int j = 0; j < dn; ++j) {
            double m = 0;
            for (int64_t r = 0; r < queries.n_rows(); ++r) m += queries.num(r, j);
            m /= static_cast<double>(queries.n_rows());
            double v = 0;
            for (int64_t r = 0; r < queries.n_rows(); ++r)
                v += (queries.num(r, j) - m) * (queries.num(r, j) - m);
            s.mean[static_cast<size_t>(j)] = m;
            s.sd[static_cast<size_t>(j)] = std::sqrt(v / static_cast<double>(queries.n_rows()));
        }
        return s;
    }

    double distance_sq(const Table& a, int64_t ra, const Table& b, int64_t rb) const {
        double acc = 0.0;
        for (int j = 0; j < a.n_numeric(); ++j) {
            const double s = sd[static_cast<size_t>(j)];
            const double d = s > 0 ? (a.num(ra, j) - b.num(rb, j)) / s : 0.0;
            acc += d * d;
        }
        for (int j = 0; j < a.n_categorical(); ++j)
            if (a.cat(ra, j) != b.cat(rb, j)) acc += 2.0;
        return acc;
    }
};

}  // namespace

MiaResult mia(const Table& train, const Table& holdout, const Table& syn, uint64_t /*seed*/) {
    require_same_schema(train, holdout, "mia");
    require_same_schema(train, syn, "mia");
    if (syn.n_rows() == 0) throw std::invalid_argument("mia: empty synthetic table");
    if (train.n_rows() != holdout.n_rows())
        throw std::invalid_argument("mia: members and non-members must be balanced");

    Table queries = train;
    queries.append_rows(holdout);
    const MiaSpace space = MiaSpace::fit(queries);

    const int64_t nq = queries.n_rows();
    std::vector<double> nearest(static_cast<size_t>(nq), 0.0);
    parallel_for(static_cast<size_t>(nq), [&](size_t q) {
        double best = INFINITY;
        for (int64_t s = 0; s < syn.n_rows(); ++s)
            best = std::min(best, space.distance_sq(queries, static_cast<int64_t>(q), syn, s));
        nearest[q] = std::sqrt(best);
    });

    std::vector<double> sorted(nearest);
    std::sort(sorted.begin(), sorted.end());
    const size_t h = sorted.size() / 2;
    const double threshold =
        sorted.size() % 2 == 0 ? 0.5 * (sorted[h - 1] + sorted[h]) : sorted[h];

    int64_t tp = 0, fp = 0;
    for (int64_t q = 0; q < nq; ++q) {
        if (nearest[static_cast<size_t>(q)] < threshold) {
            if (q < train.n_rows())
                ++tp;
            else
                ++fp;
        }
    }
    MiaResult out;
    out.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    out.recall = static_cast<double>(tp) / static_cast<double>(train.n_rows());
    return out;
}

namespace {

FeatureMatrix downstream_features(const Table& t, int target_schema_col) {
    const auto& schema = t.schema();
    int width = 0;
    for (size_t j = 0; j < schema.columns.size(); ++j) {
        if (static_cast<int>(j) == target_schema_col) continue;
        width += schema.columns[j].kind == ColumnKind::Numeric ? 1 : schema.columns[j].cardinality();
    }
    FeatureMatrix x;
    x.rows = t.n_rows();
    x.cols = width;
    x.data.assign(static_cast<size_t>(x.rows) * static_cast<size_t>(width), 0.0);
    for (int64_t r = 0; r < t.n_rows(); ++r) {
        int offset = 0;
        for (size_t j = 0; j < schema.columns.size(); ++j) {
            if (static_cast<int>(j) == target_schema_col) continue;
            if (schema.columns[j].kind == ColumnKind::Numeric) {
                x.at(r, offset) = t.num(r, t.numeric_block_of(static_cast<int>(j)));
                offset += 1;
            } else {
                const int b = t.categorical_block_of(static_cast<int>(j));
                x.at(r, offset + t.cat(r, b)) = 1.0;
                offset += schema.columns[j].cardinality();
            }
        }
    }
    return x;
}

double macro_f1(const std::vector<int>& truth, const std::vector<int>& pred, int k) {
    std::vector<int64_t> tp(static_cast<size_t>(k), 0), fp(static_cast<size_t>(k), 0),
        fn(static_cast<size_t>(k), 0);
    std::set<int> present;
    for (size_t i = 0; i < truth.size(); ++i) {
        present.insert(truth[i]);
        if (truth[i] == pred[i])
            ++tp[static_cast<size_t>(truth[i])];
        else {
            ++fp[static_cast<size_t>(pred[i])];
            ++fn[static_cast<size_t>(truth[i])];
        }
    }
    double acc = 0.0;
    for (int c : present) {
        const double p = tp[static_cast<size_t>(c)] + fp[static_cast<size_t>(c)] > 0
                             ? static_cast<double>(tp[static_cast<size_t>(c)]) /
                                   static_cast<double>(tp[static_cast<size_t>(c)] +
                                                       fp[static_cast<size_t>(c)])
                             : 0.0;
        const double r = tp[static_cast<size_t>(c)] + fn[static_cast<size_t>(c)] > 0
                             ? static_cast<double>(tp[static_cast<size_t>(c)]) /
                                   static_cast<double>(tp[static_cast<size_t>(c)] +
                                                       fn[static_cast<size_t>(c)])
                             : 0.0;
        acc += p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    return acc / static_cast<double>(present.size());
}

}  // namespace

MleResult mle(const Table& train, const Table& test_real) {
    require_same_schema(train, test_real, "mle");
    const auto& schema = train.schema();
    const int target = schema.column_index(schema.target_name);
    const FeatureMatrix x_train = downstream_features(train, target);
    const FeatureMatrix x_test = downstream_features(test_real, target);

    MleResult out;
    if (schema.task == TaskKind::Regression) {
        const int b = train.numeric_block_of(target);
        if (b < 0) throw std::invalid_argument("mle: regression target must be numeric");
        const Gbdt model = Gbdt::fit_regression(x_train, train.numeric_column(b));
        const auto pred = model.predict_raw(x_test);
        const auto y = test_real.numeric_column(test_real.numeric_block_of(target));
        double mean = 0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(y.size());
        double var = 0;
        for (double v : y) var += (v - mean) * (v - mean);
        var /= static_cast<double>(y.size());
        double mse = 0;
        for (size_t i = 0; i < y.size(); ++i) mse += (pred[i] - y[i]) * (pred[i] - y[i]);
        mse /= static_cast<double>(y.size());
        out.value = var > 0 ? std::sqrt(mse / var) : std::sqrt(mse);
        out.metric = "rmse";
        return out;
    }

    const int b = train.categorical_block_of(target);
    if (b < 0) throw std::invalid_argument("mle: classification target must be categorical");
    const auto y_train = train.categorical_column(b);
    const auto y_test = test_real.categorical_column(test_real.categorical_block_of(target));
    const int k = schema.columns[static_cast<size_t>(target)].cardinality();

    std::set<int32_t> classes(y_train.begin(), y_train.end());
    if (classes.size() < 2)
        throw std::invalid_argument("mle: synthetic target collapsed to a single class");

    if (schema.task == TaskKind::BinaryClassification) {
        std::vector<int> y01(y_train.size());
        for (size_t i = 0; i < y_train.size(); ++i) y01[i] = y_train[i] == 1 ? 1 : 0;
        const Gbdt model = Gbdt::fit_binary(x_train, y01);
        const auto scores = model.predict_proba(x_test);
        std::vector<int> labels(y_test.size());
        for (size_t i = 0; i < y_test.size(); ++i) labels[i] = y_test[i] == 1 ? 1 : 0;
        out.value = auc_score(scores, labels);
        out.metric = "auc";
        return out;
    }

    // multiclass: one-vs-rest, argmax of raw scores
    std::vector<std::vector<double>> raw(static_cast<size_t>(k));
    for (int c = 0; c < k; ++c) {
        std::vector<int> y01(y_train.size());
        for (size_t i = 0; i < y_train.size(); ++i) y01[i] = y_train[i] == c ? 1 : 0;
        bool any = false, all = true;
        for (int v : y01) {
            any = any || v == 1;
            all = all && v == 1;
        }
        if (!any || all) {
            raw[static_cast<size_t>(c)].assign(static_cast<size_t>(x_test.rows),
                                               any ? INFINITY : -INFINITY);
            continue;
        }
        raw[static_cast<size_t>(c)] = Gbdt::fit_binary(x_train, y01).predict_raw(x_test);
    }
    std::vector<int> pred(static_cast<size_t>(x_test.rows), 0);
    for (int64_t r = 0; r < x_test.rows; ++r) {
        int best = 0;
        for (int c = 1; c < k; ++c)
            if (raw[static_cast<size_t>(c)][static_cast<size_t>(r)] >
                raw[static_cast<size_t>(best)][static_cast<size_t>(r)])
                best = c;
        pred[static_cast<size_t>(r)] = best;
    }
    std::vector<int> truth(y_test.begin(), y_test.end());
    out.value = macro_f1(truth, pred, k);
    out.metric = "macro_f1";
    return out;
}

MetricReport MetricReport::from_rows(const std::vector<uint64_t>& seeds,
                                     const std::vector<std::map<std::string, double>>& rows) {
    MetricReport rep;
    rep.seeds = seeds;
    rep.per_seed = rows;
    if (!rows.empty())
        for (const auto& [name, _] : rows.front()) rep.names.push_back(name);
    for (const auto& name : rep.names) {
        double sum = 0, sum_sq = 0;
        for (const auto& row : rows) {
            const double v = row.at(name);
            sum += v;
            sum_sq += v * v;
        }
        const double n = static_cast<double>(rows.size());
        MetricStat st;
        st.n = static_cast<int64_t>(rows.size());
        st.mean = sum / n;
        if (rows.size() > 1) {
            const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
            st.stderr_ = std::sqrt(var / n);
        } else {
            st.stderr_ = 0.0;  // single seed: flagged by n = 1
        }
        rep.stats[name] = st;
    }
    return rep;
}

std::string MetricReport::to_json() const {
    nlohmann::ordered_json j;
    for (const auto& name : names) {
        const auto& st = stats.at(name);
        j[name] = {{"mean", st.mean}, {"stderr", st.stderr_}, {"n", st.n}};
    }
    return j.dump(2) + "\n";
}

std::string MetricReport::to_csv() const {
    std::string out = "seed";
    for (const auto& name : names) out += "," + name;
    out += "\n";
    for (size_t i = 0; i < per_seed.size(); ++i) {
        out += std::to_string(seeds[i]);
        for (const auto& name : names) out += "," + format_double(per_seed[i].at(name));
        out += "\n";
    }
    return out;
}

MetricReport full_report(const Table& train_real, const Table& test_real, const Table& syn,
                         const std::vector<uint64_t>& seeds) {
    if (seeds.empty()) throw std::invalid_argument("full_report: need at least one seed");
    require_same_schema(train_real, syn, "full_report");

    // the attack needs balanced member/non-member sets
    const int64_t n_mia = std::min(train_real.n_rows(), test_real.n_rows());

    std::vector<std::map<std::string, double>> rows(seeds.size());
    for (size_t si = 0; si < seeds.size(); ++si) {
        const uint64_t seed = seeds[si];
        std::map<std::string, double> row;
        row["cde"] = mean_cde(train_real, syn);
        row["pcc"] = pcc_score(train_real, syn);
        row["c2st"] = c2st(train_real, syn, seed);

        std::vector<int64_t> members(static_cast<size_t>(train_real.n_rows()));
        for (int64_t i = 0; i < train_real.n_rows(); ++i) members[static_cast<size_t>(i)] = i;
        std::vector<int64_t> non_members(static_cast<size_t>(test_real.n_rows()));
        for (int64_t i = 0; i < test_real.n_rows(); ++i) non_members[static_cast<size_t>(i)] = i;
        deterministic_shuffle(members, seed, /*stream=*/43);
        deterministic_shuffle(non_members, seed, /*stream=*/47);
        members.resize(static_cast<size_t>(n_mia));
        non_members.resize(static_cast<size_t>(n_mia));
        const MiaResult m = mia(train_real.select_rows(members),
                                test_real.select_rows(non_members), syn, seed);
        row["mia_precision"] = m.precision;
        row["mia_recall"] = m.recall;

        row["mle_syn"] = mle(syn, test_real).value;
        row["mle_real"] = mle(train_real, test_real).value;
        rows[si] = std::move(row);
    }
    return MetricReport::from_rows(seeds, rows);
}

}  // namespace tabrep
