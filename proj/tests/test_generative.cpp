#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "tabrep/generative.hpp"
#include "tabrep/io.hpp"
#include "tabrep/metrics.hpp"
#include "test_util.hpp"

using namespace tabrep;
using tabrep::testing::temp_path;
using tabrep::testing::toy_table;

namespace {

MatXf random_batch(Eigen::Index rows, Eigen::Index cols, uint64_t seed) {
    CounterRng g(seed, 800);
    MatXf m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = static_cast<float>(g.next_normal());
    return m;
}

TrainConfig desk_config(Regime regime, uint64_t seed, int64_t iterations) {
    TrainConfig cfg;
    cfg.iterations = iterations;
    cfg.batch = 128;
    cfg.regime = regime;
    cfg.seed = seed;
    cfg.eval_every = std::max<int64_t>(1, iterations / 2);
    cfg.d_t = 32;
    cfg.n_quantiles = 200;
    cfg.val_sample_rows = 128;
    return cfg;
}

}  // namespace

TEST_CASE("linear schedule satisfies the prior-matching invariants") {
    const NoiseSchedule s = NoiseSchedule::linear(1000);
    s.validate();
    CHECK(s.alpha_bar[1000] < 1e-3);
    for (int t = 1; t <= 1000; ++t) {
        CHECK(s.sigma_bar[static_cast<size_t>(t)] > 0.0);
        CHECK(s.sigma_bar[static_cast<size_t>(t)] < 1.0);
        if (t > 1)
            CHECK(s.alpha_bar[static_cast<size_t>(t)] < s.alpha_bar[static_cast<size_t>(t - 1)]);
    }
}

TEST_CASE("ddpm_noise interpolates between data and noise") {
    // beta_1 ~ 0 keeps alpha_bar_1 ~ 1, so z_1 ~ z0
    const NoiseSchedule tiny = NoiseSchedule::linear(10, 1e-12, 1e-11);
    const MatXf z0 = random_batch(4, 3, 1);
    const MatXf eps = random_batch(4, 3, 2);
    const MatXf z1 = ddpm_noise(z0, std::vector<int>(4, 1), eps, tiny);
    CHECK((z1 - z0).cwiseAbs().maxCoeff() < 1e-5);

    // at the far end of the default schedule z_T ~ eps
    const NoiseSchedule full = NoiseSchedule::linear(1000);
    const MatXf zT = ddpm_noise(z0, std::vector<int>(4, 1000), eps, full);
    CHECK((zT - eps).cwiseAbs().maxCoeff() < 2e-2);

    CHECK_THROWS(ddpm_noise(z0, std::vector<int>(4, 0), eps, full));
    CHECK_THROWS(ddpm_noise(z0, std::vector<int>(4, 1001), eps, full));
}

TEST_CASE("ddpm_noise Monte-Carlo moments match the closed form") {
    const NoiseSchedule sched = NoiseSchedule::linear(1000);
    const int t = 400;
    const int64_t n = 20000;
    const float z0_value = 1.7f;
    CounterRng g(3, 801);
    double sum = 0.0, sum_sq = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        MatXf z0(1, 1), eps(1, 1);
        z0(0, 0) = z0_value;
        eps(0, 0) = static_cast<float>(g.next_normal());
        const double v = ddpm_noise(z0, {t}, eps, sched)(0, 0);
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sum_sq / static_cast<double>(n) - mean * mean;
    const double expected_mean = sched.sqrt_alpha_bar[t] * z0_value;
    const double stderr_mean = std::sqrt(var / static_cast<double>(n));
    CHECK(std::abs(mean - expected_mean) < 3.0 * stderr_mean);
}

TEST_CASE("noise prediction and the conditional score are the same object") {
    // -eps / sigma_bar_t equals the score of N(z_t | sqrt(ab) z0, (1 - ab) I)
    const NoiseSchedule sched = NoiseSchedule::linear(1000);
    CounterRng g(4, 802);
    for (int trial = 0; trial < 200; ++trial) {
        const int t = 1 + static_cast<int>(g.next_below(1000));
        const double z0 = g.next_normal();
        const double eps = g.next_normal();
        const auto ti = static_cast<size_t>(t);
        const double z_t = sched.sqrt_alpha_bar[ti] * z0 + sched.sigma_bar[ti] * eps;
        const double score = -(z_t - sched.sqrt_alpha_bar[ti] * z0) / (1.0 - sched.alpha_bar[ti]);
        const double eps_form = -eps / sched.sigma_bar[ti];
        CHECK(std::abs(score - eps_form) <= 1e-12 * std::max(1.0, std::abs(score)));
    }
}

TEST_CASE("flow interpolation hits both endpoints exactly") {
    const float z0 = 0.8f, eps = -1.3f;
    CHECK((1.0f - 0.0f) * z0 + 0.0f * eps == z0);
    CHECK((1.0f - 1.0f) * z0 + 1.0f * eps == eps);

    // and the batch construction obeys z_t = (1 - t) z0 + t eps row by row
    const MatXf batch = random_batch(16, 3, 5);
    const NoisyBatch nb = flow_make_batch(batch, 9, 0);
    for (Eigen::Index r = 0; r < 16; ++r) {
        const float t = static_cast<float>(nb.taus[static_cast<size_t>(r)]);
        for (Eigen::Index j = 0; j < 3; ++j) {
            const float eps_rj = nb.target(r, j) + batch(r, j);  // target = eps - z0
            CHECK(nb.z_t(r, j) == doctest::Approx((1 - t) * batch(r, j) + t * eps_rj).epsilon(1e-6));
        }
    }
}

TEST_CASE("a model that predicts the target exactly has zero loss") {
    const MatXf z0 = random_batch(8, 4, 6);
    const NoisyBatch nb = ddpm_make_batch(z0, NoiseSchedule::linear(1000), 10, 0);
    const MatXf resid = nb.target - nb.target;
    CHECK(resid.squaredNorm() == 0.0);
}

TEST_CASE("an all-zero model scores the chi-square expectation") {
    // DDPM: target is eps, so the per-element loss is E[eps^2] = 1
    const DenoiserDims dims{4, 16};
    const auto params = DenoiserParamsF::zeros(dims);
    const TimeEmbedding emb{16};
    const MatXf z0 = random_batch(2048, 4, 7);
    const NoiseSchedule sched = NoiseSchedule::linear(1000);
    const LossAndGrads ddpm = ddpm_loss(params, emb, z0, sched, 11, 0);
    CHECK(ddpm.per_element == doctest::Approx(1.0).epsilon(0.1));
    CHECK(ddpm.per_row == doctest::Approx(4.0).epsilon(0.1));

    // flow with z0 = 0 data: target = eps again
    const MatXf zeros = MatXf::Zero(2048, 4);
    const LossAndGrads flow = flow_loss(params, emb, zeros, 12, 0);
    CHECK(flow.per_element == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("loss gradients are finite and shard layout does not change them") {
    const DenoiserDims dims{4, 16};
    const auto params = DenoiserParamsF::init(dims, 5);
    const TimeEmbedding emb{16};
    const MatXf z0 = random_batch(200, 4, 8);  // not a multiple of the shard size
    const NoiseSchedule sched = NoiseSchedule::linear(100);
    const LossAndGrads a = ddpm_loss(params, emb, z0, sched, 13, 7);
    const LossAndGrads b = ddpm_loss(params, emb, z0, sched, 13, 7);
    CHECK(a.per_element == b.per_element);
    for (size_t l = 0; l < 6; ++l)
        CHECK((a.grads.layers[l].w - b.grads.layers[l].w).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.grads.all_finite());
}

TEST_CASE("ddpm sampler with the analytic Gaussian score recovers the target") {
    // oracle: eps_hat = sigma_bar * (z - sqrt(ab) mu) / (ab sigma0^2 + 1 - ab)
    const NoiseSchedule sched = NoiseSchedule::linear(1000);
    const double mu = 2.0, sigma0_sq = 0.25;
    const DdpmDenoiseFn oracle = [&](const Eigen::MatrixXd& z, int t) {
        const auto ti = static_cast<size_t>(t);
        const double ab = sched.alpha_bar[ti];
        const double denom = ab * sigma0_sq + 1.0 - ab;
        return Eigen::MatrixXd(sched.sigma_bar[ti] * (z.array() - sched.sqrt_alpha_bar[ti] * mu) /
                               denom);
    };
    const int64_t n = 20000;
    const Eigen::MatrixXd rows = ddpm_sample_with(oracle, sched, 1, n, 17);
    const double mean = rows.col(0).mean();
    const double var = (rows.col(0).array() - mean).square().mean();
    CHECK(std::abs(mean - mu) < 0.05);
    CHECK(std::abs(var - sigma0_sq) < 0.1 * sigma0_sq);
}

TEST_CASE("ddpm sampler is deterministic under a fixed seed") {
    const NoiseSchedule sched = NoiseSchedule::linear(50);
    const DdpmDenoiseFn zero = [](const Eigen::MatrixXd& z, int) {
        return Eigen::MatrixXd(Eigen::MatrixXd::Zero(z.rows(), z.cols()));
    };
    const auto a = ddpm_sample_with(zero, sched, 3, 100, 23);
    const auto b = ddpm_sample_with(zero, sched, 3, 100, 23);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    const auto c = ddpm_sample_with(zero, sched, 3, 100, 24);
    CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("flow Euler recovers a point mass exactly") {
    // conditional field of a point mass: v(z, t) = (z - target) / t
    const Eigen::Vector2d target(3.0, -1.0);
    const FlowFieldFn oracle = [&](const Eigen::MatrixXd& z, double t) {
        return Eigen::MatrixXd((z.rowwise() - target.transpose()) / t);
    };
    const Eigen::MatrixXd rows = flow_sample_with(oracle, 2, 200, 50, 29);
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        CHECK(std::abs(rows(r, 0) - 3.0) < 1e-6);
        CHECK(std::abs(rows(r, 1) + 1.0) < 1e-6);
    }
}

TEST_CASE("single Euler step is z1 - v(z1)") {
    const FlowFieldFn constant = [](const Eigen::MatrixXd& z, double) {
        return Eigen::MatrixXd(Eigen::MatrixXd::Constant(z.rows(), z.cols(), 0.25));
    };
    const Eigen::MatrixXd one = flow_sample_with(constant, 1, 50, 1, 31);
    const FlowFieldFn zero = [](const Eigen::MatrixXd& z, double) {
        return Eigen::MatrixXd(Eigen::MatrixXd::Zero(z.rows(), z.cols()));
    };
    const Eigen::MatrixXd init = flow_sample_with(zero, 1, 50, 1, 31);  // z1 itself
    CHECK(((init - one).array() - 0.25).abs().maxCoeff() < 1e-12);
}

TEST_CASE("Euler error shrinks at first order on a smooth field") {
    // v(z, t) = z has the exact flow z(0) = z(1) / e
    const FlowFieldFn linear_field = [](const Eigen::MatrixXd& z, double) {
        return Eigen::MatrixXd(z);
    };
    std::vector<double> errs;
    for (int steps : {25, 50, 100, 200}) {
        const Eigen::MatrixXd rows = flow_sample_with(linear_field, 1, 400, steps, 37);
        const Eigen::MatrixXd init = flow_sample_with(
            [](const Eigen::MatrixXd& z, double) {
                return Eigen::MatrixXd(Eigen::MatrixXd::Zero(z.rows(), z.cols()));
            },
            1, 400, 1, 37);
        double err = 0;
        for (Eigen::Index r = 0; r < rows.rows(); ++r)
            err += std::abs(rows(r, 0) - init(r, 0) / std::exp(1.0));
        errs.push_back(err / static_cast<double>(rows.rows()));
    }
    for (size_t i = 0; i + 1 < errs.size(); ++i) {
        const double order = std::log2(errs[i] / errs[i + 1]);
        CHECK(order > 0.8);
        CHECK(order < 1.3);
    }
}

TEST_CASE("training reduces the loss on a toy table") {
    const Table toy = toy_table(600, 41);
    const SplitIndices idx = split(toy, {0.8, 0.1, 0.1}, 0);
    const Table train = toy.select_rows(idx.train);
    const Table val = toy.select_rows(idx.validation);

    for (Regime regime : {Regime::Ddpm, Regime::Flow}) {
        std::vector<double> first_losses, last_losses;
        for (uint64_t seed : {0u, 1u, 2u}) {
            std::vector<TrainLogRow> log;
            TrainConfig cfg = desk_config(regime, seed, 500);
            train_model(train, val, cfg, &log);
            REQUIRE(log.size() >= 2);
            first_losses.push_back(log.front().loss);
            last_losses.push_back(log.back().loss);
        }
        std::sort(first_losses.begin(), first_losses.end());
        std::sort(last_losses.begin(), last_losses.end());
        CHECK(last_losses[1] < first_losses[1]);  // median over seeds
    }
}

TEST_CASE("training is deterministic: identical checkpoint bytes") {
    const Table toy = toy_table(300, 43);
    const SplitIndices idx = split(toy, {0.8, 0.1, 0.1}, 0);
    const TrainConfig cfg = desk_config(Regime::Flow, 5, 60);
    const auto a = temp_path("generative", "det_a.ckpt");
    const auto b = temp_path("generative", "det_b.ckpt");
    save_checkpoint(a, train_model(toy.select_rows(idx.train), toy.select_rows(idx.validation), cfg));
    save_checkpoint(b, train_model(toy.select_rows(idx.train), toy.select_rows(idx.validation), cfg));
    CHECK(read_file(a) == read_file(b));
    CHECK(read_file(a).substr(0, 5) == "TREP1");
}

TEST_CASE("checkpoint round-trip preserves everything sampling needs") {
    const Table toy = toy_table(300, 47);
    const SplitIndices idx = split(toy, {0.8, 0.1, 0.1}, 0);
    const TrainConfig cfg = desk_config(Regime::Ddpm, 6, 40);
    const ModelCheckpoint ckpt =
        train_model(toy.select_rows(idx.train), toy.select_rows(idx.validation), cfg);

    const auto path = temp_path("generative", "roundtrip.ckpt");
    save_checkpoint(path, ckpt);
    const ModelCheckpoint loaded = load_checkpoint(path);
    CHECK(loaded.schema == ckpt.schema);
    CHECK(loaded.regime == ckpt.regime);
    CHECK(loaded.meta.best_iteration == ckpt.meta.best_iteration);

    const SampleResult sa = sample_table(ckpt, 64, 3);
    const SampleResult sb = sample_table(loaded, 64, 3);
    CHECK(sa.table.numeric_data() == sb.table.numeric_data());
    CHECK(sa.table.categorical_data() == sb.table.categorical_data());

    // a second save of the loaded checkpoint is byte-identical
    const auto path2 = temp_path("generative", "roundtrip2.ckpt");
    save_checkpoint(path2, loaded);
    CHECK(read_file(path) == read_file(path2));

    CHECK_THROWS(load_checkpoint(temp_path("generative", "missing.ckpt")));
}

TEST_CASE("sampled tables respect the schema contracts") {
    const Table toy = toy_table(400, 53);
    const SplitIndices idx = split(toy, {0.8, 0.1, 0.1}, 0);
    const Table train = toy.select_rows(idx.train);
    const TrainConfig cfg = desk_config(Regime::Flow, 7, 80);
    const ModelCheckpoint ckpt = train_model(train, toy.select_rows(idx.validation), cfg);

    const SampleResult empty = sample_table(ckpt, 0, 1);
    CHECK(empty.table.n_rows() == 0);
    CHECK(empty.table.schema() == toy.schema());

    const SampleResult res = sample_table(ckpt, 500, 1);
    CHECK(res.table.n_rows() == 500);
    for (int64_t i = 0; i < res.table.n_rows(); ++i) {
        CHECK(res.table.cat(i, 0) >= 0);
        CHECK(res.table.cat(i, 0) < 3);
    }
    // numeric samples stay inside the training range (quantile clipping)
    for (int j = 0; j < train.n_numeric(); ++j) {
        double mn = 1e300, mx = -1e300;
        for (int64_t i = 0; i < train.n_rows(); ++i) {
            mn = std::min(mn, train.num(i, j));
            mx = std::max(mx, train.num(i, j));
        }
        for (int64_t i = 0; i < res.table.n_rows(); ++i) {
            CHECK(res.table.num(i, j) >= mn - 1e-9);
            CHECK(res.table.num(i, j) <= mx + 1e-9);
        }
    }
    for (double rate : res.ooi_rates) {
        CHECK(rate >= 0.0);
        CHECK(rate <= 1.0);
    }

    const SampleResult again = sample_table(ckpt, 500, 1);
    CHECK(again.table.numeric_data() == res.table.numeric_data());
}

TEST_CASE("catconverter casting rate under a radial threshold stays moderate") {
    // with r_min = 0 only exact zero vectors cast; a positive threshold
    // reports the fraction of samples that fall inside the radius
    const Table toy = toy_table(400, 61);
    const SplitIndices idx = split(toy, {0.8, 0.1, 0.1}, 0);
    TrainConfig cfg = desk_config(Regime::Ddpm, 9, 400);
    const ModelCheckpoint ckpt =
        train_model(toy.select_rows(idx.train), toy.select_rows(idx.validation), cfg);
    const EncodedMatrix m = sample_encoded(ckpt, 1000, 5);

    CHECK(ooi_rate(m, ckpt.codec) == std::vector<double>{0.0});

    CategoricalCodec strict = ckpt.codec;
    strict.r_min = 0.5;
    const double rate = ooi_rate(m, strict)[0];
    CHECK(rate >= 0.0);
    CHECK(rate < 0.5);  // a trained sampler keeps most mass near the circle
}

TEST_CASE("divergence aborts with a diagnostic") {
    const Table toy = toy_table(200, 59);
    const SplitIndices idx = split(toy, {0.8, 0.1, 0.1}, 0);
    TrainConfig cfg = desk_config(Regime::Ddpm, 8, 300);
    cfg.lr = 1e6;  // guaranteed blow-up
    CHECK_THROWS_WITH_AS(
        train_model(toy.select_rows(idx.train), toy.select_rows(idx.validation), cfg),
        doctest::Contains("diverged"), std::runtime_error);
}
