#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tabrep/denoiser.hpp"
#include "tabrep/encoded.hpp"
#include "tabrep/table.hpp"

namespace tabrep {

enum class Regime { Ddpm, Flow };
std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

// Per-step DDPM coefficients; index 0 is unused so that t runs over [1, T].
struct NoiseSchedule {
    int steps = 0;
    double beta_min = 1e-4;
    double beta_max = 0.02;
    std::vector<double> beta;           // beta_t
    std::vector<double> alpha;          // 1 - beta_t
    std::vector<double> alpha_bar;      // prod alpha_s
    std::vector<double> sqrt_alpha_bar;
    std::vector<double> sigma_bar;      // sqrt(1 - alpha_bar)

    static NoiseSchedule linear(int steps = 1000, double beta_min = 1e-4, double beta_max = 0.02);
    void validate() const;
};

// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps, elementwise over rows
template <typename S>
MatX<S> ddpm_noise(const MatX<S>& z0, const std::vector<int>& t, const MatX<S>& eps,
                   const NoiseSchedule& sched) {
    if (z0.rows() != eps.rows() || z0.cols() != eps.cols())
        throw std::invalid_argument("ddpm_noise: z0/eps shape mismatch");
    if (t.size() != static_cast<size_t>(z0.rows()))
        throw std::invalid_argument("ddpm_noise: one step index per row required");
    MatX<S> z_t(z0.rows(), z0.cols());
    for (Eigen::Index r = 0; r < z0.rows(); ++r) {
        const int ti = t[static_cast<size_t>(r)];
        if (ti < 1 || ti > sched.steps)
            throw std::out_of_range("ddpm_noise: step index out of [1, T]");
        z_t.row(r) = static_cast<S>(sched.sqrt_alpha_bar[static_cast<size_t>(ti)]) * z0.row(r) +
                     static_cast<S>(sched.sigma_bar[static_cast<size_t>(ti)]) * eps.row(r);
    }
    return z_t;
}

using MatXf = MatX<float>;

// Noised mini-batch plus the regression target of the regime:
// DDPM predicts the injected noise, flow matching predicts eps - z0.
struct NoisyBatch {
    MatXf z_t;
    std::vector<double> taus;  // normalized time per row
    MatXf target;
    std::vector<int> t_index;  // DDPM only
};

NoisyBatch ddpm_make_batch(const MatXf& z0, const NoiseSchedule& sched, uint64_t seed,
                           int64_t iteration, int64_t slot_offset = 0);
NoisyBatch flow_make_batch(const MatXf& z0, uint64_t seed, int64_t iteration,
                           int64_t slot_offset = 0);

struct LossAndGrads {
    double per_element = 0.0;  // ||pred - target||^2 / (batch * d_in)
    double per_row = 0.0;      // ||pred - target||^2 / batch
    DenoiserParamsF grads;
};

LossAndGrads ddpm_loss(const DenoiserParamsF& params, const TimeEmbedding& emb, const MatXf& z0,
                       const NoiseSchedule& sched, uint64_t seed, int64_t iteration);
LossAndGrads flow_loss(const DenoiserParamsF& params, const TimeEmbedding& emb, const MatXf& z0,
                       uint64_t seed, int64_t iteration);

// eps-predictor: (z_t, t) -> eps_hat
using DdpmDenoiseFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, int)>;
// velocity field: (z_t, t in [0,1]) -> v
using FlowFieldFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, double)>;

// Ancestral reverse chain from z_T ~ N(0, I); injected noise sqrt(beta_t),
// none on the final step. Rows are keyed individually so the result does not
// depend on chunking or thread count.
Eigen::MatrixXd ddpm_sample_with(const DdpmDenoiseFn& fn, const NoiseSchedule& sched, int d_in,
                                 int64_t n_rows, uint64_t seed);

// Backward Euler pass over the uniform grid t_i = i / steps from t = 1 to 0.
Eigen::MatrixXd flow_sample_with(const FlowFieldFn& fn, int d_in, int64_t n_rows, int steps,
                                 uint64_t seed);

struct TrainConfig {
    int64_t iterations = 100000;
    int batch = 4096;
    double lr = 1e-4;
    double weight_decay = 5e-4;
    Regime regime = Regime::Ddpm;
    uint64_t seed = 0;
    int64_t eval_every = 1000;
    std::string val_metric = "cde";

    CodecKind codec = CodecKind::CatConverter;
    double codec_r_min = 0.0;
    bool onehot_softmax = false;
    int d_t = 1024;
    int n_quantiles = 1000;
    int schedule_steps = 1000;
    double beta_min = 1e-4;
    double beta_max = 0.02;
    int flow_sampling_steps = 50;
    int val_sample_rows = 256;
    int64_t log_every = 100;

    void validate() const;
};

struct TrainingMeta {
    uint64_t seed = 0;
    int64_t iterations = 0;
    int64_t best_iteration = -1;
    double val_score = 0.0;
    double final_loss = 0.0;
    int64_t skipped_steps = 0;
};

// Self-contained: sampling needs nothing but this object.
struct ModelCheckpoint {
    TableSchema schema;
    QuantileMap qmap;
    CategoricalCodec codec;
    DenoiserParamsF params;
    NoiseSchedule schedule;
    Regime regime = Regime::Ddpm;
    int flow_sampling_steps = 50;
    TrainingMeta meta;
};

struct TrainLogRow {
    int64_t iteration = 0;
    double loss = 0.0;
    bool has_val = false;
    double val_score = 0.0;
};

ModelCheckpoint train_model(const Table& train_table, const Table& val_table,
                            const TrainConfig& cfg, std::vector<TrainLogRow>* log = nullptr);

EncodedMatrix sample_encoded(const ModelCheckpoint& ckpt, int64_t n_rows, uint64_t seed,
                             std::optional<int> flow_steps = std::nullopt);

struct SampleResult {
    Table table;
    std::vector<double> ooi_rates;  // per categorical column
};

SampleResult sample_table(const ModelCheckpoint& ckpt, int64_t n_rows, uint64_t seed,
                          std::optional<int> flow_steps = std::nullopt);

// "TREP1" magic, JSON manifest, then raw little-endian payload: f64 quantile
// grids followed by the f32 denoiser tensors in declaration order.
void save_checkpoint(const std::string& path, const ModelCheckpoint& ckpt);
ModelCheckpoint load_checkpoint(const std::string& path);

}  // namespace tabrep
