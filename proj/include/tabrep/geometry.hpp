#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tabrep {

// Configuration of one singular-point experiment: K one-hot modes scaled by
// `alpha` under isotropic noise `sigma`, with the equidistant subset S.
struct SingularConfig {
    int k = 2;
    std::vector<int> subset;  // S, indices in [0, K), |S| >= 2
    double alpha = 1.0;
    double sigma = 1.0;

    void validate() const;
    int n() const { return static_cast<int>(subset.size()); }
};

struct PriorSpec {
    enum class Kind { Uniform, Categorical } kind = Kind::Uniform;
    std::vector<double> weights;  // categorical only; positive, sums to 1

    static PriorSpec uniform() { return PriorSpec{}; }
    static PriorSpec categorical(std::vector<double> w);
    void validate(size_t support_size) const;
    double weight(size_t i, size_t support_size) const;
};

// centroid of the one-hot vectors indexed by S
std::vector<double> minimal_singular_point(const SingularConfig& cfg);

// 2^K - (K + 1); guarded for K <= 62
uint64_t count_minimal_singular_points(int k);

// brute-force subset enumeration, for cross-checking the closed form
uint64_t count_minimal_singular_points_enumerated(int k);

// dim(H_S) = K - n + 1
int hyperplane_dim(int k, int n);

// alpha^2 / sigma^4 * (n - 1) / n at the minimal n-singular point under a
// uniform prior over S; n = 1 degenerates to 0.
double score_variance_closed_form(const SingularConfig& cfg);

// Posterior-weighted variance of the conditional score at a fixed point x,
// computed exactly in log-space over the modes in `support`.
double score_variance_exact(const std::vector<double>& x, double alpha, double sigma,
                            const std::vector<int>& support, const PriorSpec& prior);

struct VarianceEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    int64_t n = 0;
};

// Evaluates the exact posterior-weighted variance at `samples` noisy draws
// x_i ~ N(x, sigma^2 I) and reports mean +/- stderr. samples <= 1 evaluates
// deterministically at x itself.
VarianceEstimate score_variance_empirical(const SingularConfig& cfg, const PriorSpec& prior,
                                          const std::vector<double>& x, int64_t samples,
                                          uint64_t seed);

struct SingularReportRow {
    int k = 0;
    int n = 0;
    uint64_t subset_id = 0;  // bitmask over {0..K-1}
    double closed_form = 0.0;
    double exact = 0.0;
    double abs_err = 0.0;
};

// One row per subset with |S| >= 2, K <= 12. Writes CSV when `out` is
// non-empty (columns: K, n, subset_id, closed_form, exact, abs_err).
std::vector<SingularReportRow> singular_report(int k, double alpha, double sigma,
                                               const std::string& out);

}  // namespace tabrep
