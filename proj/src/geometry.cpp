#include "tabrep/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <stdexcept>

#include "tabrep/io.hpp"
#include "tabrep/rng.hpp"

namespace tabrep {

void SingularConfig::validate() const {
    if (k < 2) throw std::invalid_argument("geometry: K must be >= 2");
    if (subset.size() < 2 || subset.size() > static_cast<size_t>(k))
        throw std::invalid_argument("geometry: |S| must be in [2, K]");
    std::set<int> seen;
    for (int s : subset) {
        if (s < 0 || s >= k) throw std::invalid_argument("geometry: subset index out of range");
        if (!seen.insert(s).second) throw std::invalid_argument("geometry: duplicate subset index");
    }
    if (!(sigma > 0)) throw std::invalid_argument("geometry: sigma must be positive");
}

PriorSpec PriorSpec::categorical(std::vector<double> w) {
    PriorSpec p;
    p.kind = Kind::Categorical;
    p.weights = std::move(w);
    return p;
}

void PriorSpec::validate(size_t support_size) const {
    if (kind == Kind::Uniform) return;
    if (weights.size() != support_size)
        throw std::invalid_argument("geometry: prior weights do not match support");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w > 0)) throw std::invalid_argument("geometry: prior weights must be positive");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("geometry: prior weights must sum to 1");
}

double PriorSpec::weight(size_t i, size_t support_size) const {
    if (kind == Kind::Uniform) return 1.0 / static_cast<double>(support_size);
    return weights[i];
}

std::vector<double> minimal_singular_point(const SingularConfig& cfg) {
    cfg.validate();
    std::vector<double> x(static_cast<size_t>(cfg.k), 0.0);
    const double v = 1.0 / static_cast<double>(cfg.subset.size());
    for (int s : cfg.subset) x[static_cast<size_t>(s)] = v;
    return x;
}

uint64_t count_minimal_singular_points(int k) {
    if (k < 2) throw std::invalid_argument("geometry: K must be >= 2");
    if (k > 62) throw std::invalid_argument("geometry: K > 62 overflows the count");
    return (uint64_t{1} << k) - static_cast<uint64_t>(k) - 1;
}

uint64_t count_minimal_singular_points_enumerated(int k) {
    if (k < 2 || k > 24)
        throw std::invalid_argument("geometry: enumeration supported for 2 <= K <= 24");
    uint64_t count = 0;
    const uint64_t end = uint64_t{1} << k;
    for (uint64_t mask = 0; mask < end; ++mask)
        if (std::popcount(mask) >= 2) ++count;
    return count;
}

int hyperplane_dim(int k, int n) {
    if (n < 2 || n > k) throw std::invalid_argument("geometry: need 2 <= n <= K");
    return k - n + 1;
}

double score_variance_closed_form(const SingularConfig& cfg) {
    cfg.validate();
    const double n = static_cast<double>(cfg.subset.size());
    const double a2 = cfg.alpha * cfg.alpha;
    const double s4 = cfg.sigma * cfg.sigma * cfg.sigma * cfg.sigma;
    return a2 / s4 * (n - 1.0) / n;
}

double score_variance_exact(const std::vector<double>& x, double alpha, double sigma,
                            const std::vector<int>& support, const PriorSpec& prior) {
    if (support.empty()) throw std::invalid_argument("geometry: empty support");
    prior.validate(support.size());
    const size_t k = x.size();
    const double inv_s2 = 1.0 / (sigma * sigma);
    const size_t m = support.size();

    // log posterior weights, max-subtracted so nothing underflows to NaN
    std::vector<double> logw(m);
    double logw_max = -INFINITY;
    for (size_t i = 0; i < m; ++i) {
        const size_t mode = static_cast<size_t>(support[i]);
        if (mode >= k) throw std::invalid_argument("geometry: support index out of range");
        double d2 = 0.0;
        for (size_t j = 0; j < k; ++j) {
            const double diff = x[j] - (j == mode ? alpha : 0.0);
            d2 += diff * diff;
        }
        logw[i] = std::log(prior.weight(i, m)) - 0.5 * d2 * inv_s2;
        logw_max = std::max(logw_max, logw[i]);
    }
    double z = 0.0;
    for (size_t i = 0; i < m; ++i) z += std::exp(logw[i] - logw_max);
    std::vector<double> q(m);
    for (size_t i = 0; i < m; ++i) q[i] = std::exp(logw[i] - logw_max) / z;

    // conditional scores g_i = -(x - alpha e_i) / sigma^2 and their
    // posterior-weighted mean; only the mode coordinate differs between
    // g_i's, so work with the deviation terms directly:
    //   g_i - g_bar = (alpha / sigma^2) (e_i - sum_j q_j e_j)
    std::vector<double> e_bar(k, 0.0);
    for (size_t i = 0; i < m; ++i) e_bar[static_cast<size_t>(support[i])] += q[i];
    double e_bar_sq = 0.0;
    for (size_t i = 0; i < m; ++i) {
        const double b = e_bar[static_cast<size_t>(support[i])];
        e_bar_sq += q[i] * b;  // sum q_i <e_i, e_bar> = ||e_bar||^2
    }
    double var = 0.0;
    for (size_t i = 0; i < m; ++i) {
        // ||e_i - e_bar||^2 = 1 - 2 e_bar[i] + ||e_bar||^2
        const double b = e_bar[static_cast<size_t>(support[i])];
        var += q[i] * (1.0 - 2.0 * b + e_bar_sq);
    }
    const double scale = alpha * inv_s2;
    return var * scale * scale;
}

VarianceEstimate score_variance_empirical(const SingularConfig& cfg, const PriorSpec& prior,
                                          const std::vector<double>& x, int64_t samples,
                                          uint64_t seed) {
    cfg.validate();
    if (x.size() != static_cast<size_t>(cfg.k))
        throw std::invalid_argument("geometry: x has wrong dimension");

    VarianceEstimate est;
    if (samples <= 1) {
        est.mean = score_variance_exact(x, cfg.alpha, cfg.sigma, cfg.subset, prior);
        est.stderr_ = 0.0;
        est.n = 1;
        return est;
    }
    if (samples < 10000)
        throw std::invalid_argument("geometry: need at least 1e4 samples for the stochastic path");

    CounterRng g(seed, /*stream=*/29);
    double sum = 0.0, sum_sq = 0.0;
    std::vector<double> xi(x.size());
    for (int64_t s = 0; s < samples; ++s) {
        for (size_t j = 0; j < x.size(); ++j) xi[j] = x[j] + cfg.sigma * g.next_normal();
        const double v = score_variance_exact(xi, cfg.alpha, cfg.sigma, cfg.subset, prior);
        sum += v;
        sum_sq += v * v;
    }
    const double n = static_cast<double>(samples);
    est.mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - est.mean * est.mean);
    est.stderr_ = std::sqrt(var / n);
    est.n = samples;
    return est;
}

std::vector<SingularReportRow> singular_report(int k, double alpha, double sigma,
                                               const std::string& out) {
    if (k < 2) throw std::invalid_argument("geometry: K must be >= 2");
    if (k > 12) throw std::invalid_argument("geometry: report limited to K <= 12");

    std::vector<SingularReportRow> rows;
    const uint64_t end = uint64_t{1} << k;
    for (uint64_t mask = 0; mask < end; ++mask) {
        const int n = std::popcount(mask);
        if (n < 2) continue;
        SingularConfig cfg;
        cfg.k = k;
        cfg.alpha = alpha;
        cfg.sigma = sigma;
        for (int b = 0; b < k; ++b)
            if (mask & (uint64_t{1} << b)) cfg.subset.push_back(b);

        SingularReportRow row;
        row.k = k;
        row.n = n;
        row.subset_id = mask;
        row.closed_form = score_variance_closed_form(cfg);
        row.exact = score_variance_exact(minimal_singular_point(cfg), alpha, sigma, cfg.subset,
                                         PriorSpec::uniform());
        row.abs_err = std::abs(row.closed_form - row.exact);
        rows.push_back(std::move(row));
    }

    if (!out.empty()) {
        std::string csv = "K,n,subset_id,closed_form,exact,abs_err\n";
        for (const auto& r : rows) {
            csv += std::to_string(r.k) + "," + std::to_string(r.n) + "," +
                   std::to_string(r.subset_id) + "," + format_double(r.closed_form) + "," +
                   format_double(r.exact) + "," + format_double(r.abs_err) + "\n";
        }
        atomic_write_file(out, csv);
    }
    return rows;
}

}  // namespace tabrep
