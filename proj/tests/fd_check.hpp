#pragma once

#include <algorithm>
#include <cmath>

#include "tabrep/denoiser.hpp"

namespace tabrep::testing {

// Central finite differences (h = 1e-6) of the scalar objective
// 0.5 ||forward(z)||^2 against the analytic backward pass, over every
// parameter of a randomly perturbed small denoiser.
struct FdResult {
    double max_rel_err = 0.0;
    int64_t checked = 0;
};

inline FdResult finite_difference_gradient_check(const DenoiserDims& dims, uint64_t seed,
                                                 int batch) {
    const TimeEmbedding emb{dims.d_t};
    DenoiserParamsD params = DenoiserParamsD::init(dims, seed);
    {
        CounterRng g(seed, 901);
        params.visit([&](MatX<double>& t) {
            for (Eigen::Index i = 0; i < t.rows(); ++i)
                for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) += 0.05 * g.next_normal();
        });
    }
    MatX<double> z(batch, dims.d_in);
    std::vector<double> taus(static_cast<size_t>(batch));
    {
        CounterRng g(seed, 902);
        for (Eigen::Index i = 0; i < z.rows(); ++i)
            for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = g.next_normal();
        for (auto& t : taus) t = g.next_unit();
    }

    const auto objective = [&] {
        return 0.5 * denoiser_forward(params, emb, z, taus).squaredNorm();
    };

    ForwardCache<double> cache;
    const MatX<double> y = denoiser_forward(params, emb, z, taus, &cache);
    const DenoiserParamsD grads = denoiser_backward(params, cache, y);

    FdResult out;
    const double h = 1e-6;
    for (size_t l = 0; l < 6; ++l) {
        for (int part = 0; part < 2; ++part) {
            MatX<double>& tensor = part == 0 ? params.layers[l].w : params.layers[l].b;
            const MatX<double>& analytic = part == 0 ? grads.layers[l].w : grads.layers[l].b;
            for (Eigen::Index i = 0; i < tensor.rows(); ++i) {
                for (Eigen::Index j = 0; j < tensor.cols(); ++j) {
                    const double saved = tensor(i, j);
                    tensor(i, j) = saved + h;
                    const double up = objective();
                    tensor(i, j) = saved - h;
                    const double dn = objective();
                    tensor(i, j) = saved;
                    const double fd = (up - dn) / (2.0 * h);
                    const double an = analytic(i, j);
                    const double rel =
                        std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-3});
                    out.max_rel_err = std::max(out.max_rel_err, rel);
                    ++out.checked;
                }
            }
        }
    }
    return out;
}

}  // namespace tabrep::testing
