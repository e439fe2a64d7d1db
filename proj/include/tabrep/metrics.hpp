#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tabrep/table.hpp"

namespace tabrep {

// two-sample Kolmogorov-Smirnov statistic, sup_x |F1 - F2|
double kst(const std::vector<double>& a, const std::vector<double>& b);

// half L1 distance between the PMFs implied by two count vectors
double tvd(const std::vector<int64_t>& counts_a, const std::vector<int64_t>& counts_b);
double tvd_indices(const std::vector<int32_t>& a, const std::vector<int32_t>& b, int k);

// Pearson correlation; 0 when either side is constant
double pearson(const std::vector<double>& x, const std::vector<double>& y);

// pairwise-correlation dissimilarity 0.5 |rho_real - rho_syn|
double pearson_score(const std::vector<double>& x_real, const std::vector<double>& y_real,
                     const std::vector<double>& x_syn, const std::vector<double>& y_syn);

// half L1 distance between two joint contingency PMFs
double contingency_score(const std::vector<int32_t>& a1, const std::vector<int32_t>& a2,
                         const std::vector<int32_t>& b1, const std::vector<int32_t>& b2, int k1,
                         int k2);

struct BinningSpec {
    int bins = 20;
};

// strictly increasing quantile edges fitted on `values`
std::vector<double> quantile_bin_edges(const std::vector<double>& values, int bins);
std::vector<int32_t> digitize(const std::vector<double>& values, const std::vector<double>& edges);

// per-column fidelity: 1 - KST for numeric columns, 1 - TVD for categorical
std::vector<double> column_density_scores(const Table& real, const Table& syn);
double mean_cde(const Table& real, const Table& syn);

// 1 - mean pairwise dissimilarity; numeric members of mixed pairs are binned
// on the real data's quantiles
double pcc_score(const Table& real, const Table& syn, const BinningSpec& binning = {});

// Classifier two-sample test: 5-fold out-of-fold detection AUC of an
// in-repo logistic regression; 1 means indistinguishable.
double c2st(const Table& real, const Table& syn, uint64_t seed);

struct MiaResult {
    double precision = 0.0;
    double recall = 0.0;
};

// Distance-to-nearest-synthetic attack with a median threshold, which pins
// the overall positive rate at one half.
MiaResult mia(const Table& train, const Table& holdout, const Table& syn, uint64_t seed);

struct MleResult {
    double value = 0.0;
    std::string metric;  // "auc" | "macro_f1" | "rmse"
};

// Downstream efficiency: boosted trees trained on `train` and scored on the
// real test split; AUC (binary), macro-F1 (multiclass), RMSE over
// standardized targets (regression, lower is better).
MleResult mle(const Table& train, const Table& test_real);

// rank-based AUC with tie midranks
double auc_score(const std::vector<double>& scores, const std::vector<int>& labels);

struct MetricStat {
    double mean = 0.0;
    double stderr_ = 0.0;
    int64_t n = 0;
};

struct MetricReport {
    std::vector<std::string> names;
    std::map<std::string, MetricStat> stats;
    std::vector<uint64_t> seeds;
    std::vector<std::map<std::string, double>> per_seed;

    std::string to_json() const;
    std::string to_csv() const;  // wide format, one row per seed
    static MetricReport from_rows(const std::vector<uint64_t>& seeds,
                                  const std::vector<std::map<std::string, double>>& rows);
};

MetricReport full_report(const Table& train_real, const Table& test_real, const Table& syn,
                         const std::vector<uint64_t>& seeds);

}  // namespace tabrep
