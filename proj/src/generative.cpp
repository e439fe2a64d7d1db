#include "tabrep/generative.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tabrep/metrics.hpp"
#include "tabrep/parallel.hpp"
#include "tabrep/rng.hpp"

namespace tabrep {

namespace {

// rng domain tags; every stochastic draw in this module is keyed by
// (seed, domain, indices) so shard layout and thread count cannot move noise
enum Domain : uint64_t {
    kBatchIndices = 0x10,
    kStepDraw = 0x11,
    kNoiseDraw = 0x12,
    kSampleInit = 0x13,
    kSampleStep = 0x14,
    kParamsInit = 0x15,
    kValSample = 0x16,
};

uint64_t substream(uint64_t domain, uint64_t a = 0, uint64_t b = 0) {
    return rng::mix64(domain + rng::mix64(a + rng::mix64(b)));
}

constexpr int kShardRows = 64;    // training shard
constexpr int kSampleChunk = 256; // sampling chunk

}  // namespace

std::string to_string(Regime r) { return r == Regime::Ddpm ? "ddpm" : "flow"; }

Regime regime_from_string(const std::string& s) {
    if (s == "ddpm") return Regime::Ddpm;
    if (s == "flow") return Regime::Flow;
    throw std::invalid_argument("regime must be 'ddpm' or 'flow', got '" + s + "'");
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_min, double beta_max) {
    if (steps < 1) throw std::invalid_argument("schedule: steps must be >= 1");
    if (!(beta_min > 0 && beta_min < beta_max && beta_max < 1))
        throw std::invalid_argument("schedule: need 0 < beta_min < beta_max < 1");
    NoiseSchedule s;
    s.steps = steps;
    s.beta_min = beta_min;
    s.beta_max = beta_max;
    s.beta.resize(static_cast<size_t>(steps) + 1, 0.0);
    s.alpha.resize(s.beta.size(), 1.0);
    s.alpha_bar.resize(s.beta.size(), 1.0);
    s.sqrt_alpha_bar.resize(s.beta.size(), 1.0);
    s.sigma_bar.resize(s.beta.size(), 0.0);
    double prod = 1.0;
    for (int t = 1; t <= steps; ++t) {
        const double frac = steps == 1 ? 0.0
                                       : static_cast<double>(t - 1) / static_cast<double>(steps - 1);
        const double b = beta_min + (beta_max - beta_min) * frac;
        s.beta[static_cast<size_t>(t)] = b;
        s.alpha[static_cast<size_t>(t)] = 1.0 - b;
        prod *= 1.0 - b;
        s.alpha_bar[static_cast<size_t>(t)] = prod;
        s.sqrt_alpha_bar[static_cast<size_t>(t)] = std::sqrt(prod);
        s.sigma_bar[static_cast<size_t>(t)] = std::sqrt(1.0 - prod);
    }
    return s;
}

void NoiseSchedule::validate() const {
    if (steps < 1) throw std::invalid_argument("schedule: empty");
    for (int t = 1; t <= steps; ++t) {
        const auto ti = static_cast<size_t>(t);
        if (!(beta[ti] > 0 && beta[ti] < 1))
            throw std::invalid_argument("schedule: beta out of (0,1)");
        if (t > 1 && !(alpha_bar[ti] < alpha_bar[ti - 1]))
            throw std::invalid_argument("schedule: alpha_bar not strictly decreasing");
    }
    if (steps >= 100 && !(alpha_bar[static_cast<size_t>(steps)] < 1e-3))
        throw std::invalid_argument("schedule: terminal alpha_bar too large; prior not Gaussian");
}

NoisyBatch ddpm_make_batch(const MatXf& z0, const NoiseSchedule& sched, uint64_t seed,
                           int64_t iteration, int64_t slot_offset) {
    const Eigen::Index b = z0.rows(), d = z0.cols();
    NoisyBatch out;
    out.z_t.resize(b, d);
    out.target.resize(b, d);
    out.taus.resize(static_cast<size_t>(b));
    out.t_index.resize(static_cast<size_t>(b));
    for (Eigen::Index r = 0; r < b; ++r) {
        const uint64_t slot = static_cast<uint64_t>(slot_offset + r);
        CounterRng step_rng(seed, substream(kStepDraw, static_cast<uint64_t>(iteration), slot));
        const int t = 1 + static_cast<int>(step_rng.next_below(static_cast<uint64_t>(sched.steps)));
        out.t_index[static_cast<size_t>(r)] = t;
        out.taus[static_cast<size_t>(r)] =
            static_cast<double>(t) / static_cast<double>(sched.steps);
        CounterRng noise(seed, substream(kNoiseDraw, static_cast<uint64_t>(iteration), slot));
        const float sab = static_cast<float>(sched.sqrt_alpha_bar[static_cast<size_t>(t)]);
        const float sb = static_cast<float>(sched.sigma_bar[static_cast<size_t>(t)]);
        for (Eigen::Index j = 0; j < d; ++j) {
            const float eps = static_cast<float>(noise.next_normal());
            out.target(r, j) = eps;
            out.z_t(r, j) = sab * z0(r, j) + sb * eps;
        }
    }
    return out;
}

NoisyBatch flow_make_batch(const MatXf& z0, uint64_t seed, int64_t iteration,
                           int64_t slot_offset) {
    const Eigen::Index b = z0.rows(), d = z0.cols();
    NoisyBatch out;
    out.z_t.resize(b, d);
    out.target.resize(b, d);
    out.taus.resize(static_cast<size_t>(b));
    for (Eigen::Index r = 0; r < b; ++r) {
        const uint64_t slot = static_cast<uint64_t>(slot_offset + r);
        CounterRng step_rng(seed, substream(kStepDraw, static_cast<uint64_t>(iteration), slot));
        const double t = step_rng.next_unit();
        out.taus[static_cast<size_t>(r)] = t;
        CounterRng noise(seed, substream(kNoiseDraw, static_cast<uint64_t>(iteration), slot));
        const float tf = static_cast<float>(t);
        for (Eigen::Index j = 0; j < d; ++j) {
            const float eps = static_cast<float>(noise.next_normal());
            out.target(r, j) = eps - z0(r, j);
            out.z_t(r, j) = (1.0f - tf) * z0(r, j) + tf * eps;
        }
    }
    return out;
}

namespace {

void params_accumulate(DenoiserParamsF& into, const DenoiserParamsF& other) {
    for (size_t l = 0; l < 6; ++l) {
        into.layers[l].w += other.layers[l].w;
        into.layers[l].b += other.layers[l].b;
    }
}

// Shards of kShardRows rows processed in waves of worker_count() buffers;
// the final reduction walks shards in ascending order, so results are
// bit-identical for any thread count.
LossAndGrads sharded_regime_loss(const DenoiserParamsF& params, const TimeEmbedding& emb,
                                 const MatXf& z0, const NoiseSchedule* sched, Regime regime,
                                 uint64_t seed, int64_t iteration) {
    const Eigen::Index batch = z0.rows();
    const Eigen::Index d = z0.cols();
    if (batch == 0) throw std::invalid_argument("loss: empty batch");

    const int64_t n_shards = (batch + kShardRows - 1) / kShardRows;
    const int wave = std::max(1, worker_count());

    LossAndGrads out;
    out.grads = DenoiserParamsF::zeros(params.dims);
    double sq_sum = 0.0;

    std::vector<DenoiserParamsF> bufs(static_cast<size_t>(std::min<int64_t>(wave, n_shards)));
    std::vector<double> shard_sq(bufs.size());
    for (int64_t wave_start = 0; wave_start < n_shards; wave_start += wave) {
        const int64_t wave_n = std::min<int64_t>(wave, n_shards - wave_start);
        parallel_for(static_cast<size_t>(wave_n), [&](size_t i) {
            const int64_t s = wave_start + static_cast<int64_t>(i);
            const Eigen::Index lo = s * kShardRows;
            const Eigen::Index rows = std::min<Eigen::Index>(kShardRows, batch - lo);
            const MatXf z0s = z0.middleRows(lo, rows);
            NoisyBatch nb = regime == Regime::Ddpm
                                ? ddpm_make_batch(z0s, *sched, seed, iteration, lo)
                                : flow_make_batch(z0s, seed, iteration, lo);
            ForwardCache<float> cache;
            MatXf pred = denoiser_forward(params, emb, nb.z_t, nb.taus, &cache);
            MatXf resid = pred - nb.target;
            shard_sq[i] = static_cast<double>(resid.squaredNorm());
            // d/dpred of sum ||resid||^2 / (batch * d); the scale folds into
            // the upstream gradient so shard sums stay exact
            const float scale = 2.0f / (static_cast<float>(batch) * static_cast<float>(d));
            resid *= scale;
            bufs[i] = denoiser_backward(params, cache, resid);
        });
        for (int64_t i = 0; i < wave_n; ++i) {
            params_accumulate(out.grads, bufs[static_cast<size_t>(i)]);
            sq_sum += shard_sq[static_cast<size_t>(i)];
        }
    }
    out.per_row = sq_sum / static_cast<double>(batch);
    out.per_element = out.per_row / static_cast<double>(d);
    return out;
}

}  // namespace

LossAndGrads ddpm_loss(const DenoiserParamsF& params, const TimeEmbedding& emb, const MatXf& z0,
                       const NoiseSchedule& sched, uint64_t seed, int64_t iteration) {
    return sharded_regime_loss(params, emb, z0, &sched, Regime::Ddpm, seed, iteration);
}

LossAndGrads flow_loss(const DenoiserParamsF& params, const TimeEmbedding& emb, const MatXf& z0,
                       uint64_t seed, int64_t iteration) {
    return sharded_regime_loss(params, emb, z0, nullptr, Regime::Flow, seed, iteration);
}

Eigen::MatrixXd ddpm_sample_with(const DdpmDenoiseFn& fn, const NoiseSchedule& sched, int d_in,
                                 int64_t n_rows, uint64_t seed) {
    Eigen::MatrixXd out(n_rows, d_in);
    if (n_rows == 0) return out;
    const int64_t n_chunks = (n_rows + kSampleChunk - 1) / kSampleChunk;
    parallel_for(static_cast<size_t>(n_chunks), [&](size_t c) {
        const int64_t lo = static_cast<int64_t>(c) * kSampleChunk;
        const int64_t rows = std::min<int64_t>(kSampleChunk, n_rows - lo);
        Eigen::MatrixXd z(rows, d_in);
        for (int64_t r = 0; r < rows; ++r) {
            CounterRng g(seed, substream(kSampleInit, static_cast<uint64_t>(lo + r)));
            for (int j = 0; j < d_in; ++j) z(r, j) = g.next_normal();
        }
        for (int t = sched.steps; t >= 1; --t) {
            const Eigen::MatrixXd eps_hat = fn(z, t);
            const auto ti = static_cast<size_t>(t);
            const double coef = (1.0 - sched.alpha[ti]) / sched.sigma_bar[ti];
            const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha[ti]);
            z = inv_sqrt_alpha * (z - coef * eps_hat);
            if (t > 1) {
                const double sigma = std::sqrt(sched.beta[ti]);
                for (int64_t r = 0; r < rows; ++r) {
                    CounterRng g(seed, substream(kSampleStep, static_cast<uint64_t>(lo + r),
                                                 static_cast<uint64_t>(t)));
                    for (int j = 0; j < d_in; ++j) z(r, j) += sigma * g.next_normal();
                }
            }
        }
        out.middleRows(lo, rows) = z;
    });
    return out;
}

Eigen::MatrixXd flow_sample_with(const FlowFieldFn& fn, int d_in, int64_t n_rows, int steps,
                                 uint64_t seed) {
    if (steps < 1) throw std::invalid_argument("flow_sample: steps must be >= 1");
    Eigen::MatrixXd out(n_rows, d_in);
    if (n_rows == 0) return out;
    const int64_t n_chunks = (n_rows + kSampleChunk - 1) / kSampleChunk;
    parallel_for(static_cast<size_t>(n_chunks), [&](size_t c) {
        const int64_t lo = static_cast<int64_t>(c) * kSampleChunk;
        const int64_t rows = std::min<int64_t>(kSampleChunk, n_rows - lo);
        Eigen::MatrixXd z(rows, d_in);
        for (int64_t r = 0; r < rows; ++r) {
            CounterRng g(seed, substream(kSampleInit, static_cast<uint64_t>(lo + r)));
            for (int j = 0; j < d_in; ++j) z(r, j) = g.next_normal();
        }
        const double h = 1.0 / static_cast<double>(steps);
        for (int i = steps; i >= 1; --i) {
            const double t = static_cast<double>(i) / static_cast<double>(steps);
            z -= h * fn(z, t);
        }
        out.middleRows(lo, rows) = z;
    });
    return out;
}

void TrainConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("train: iterations must be >= 1");
    if (batch < 1) throw std::invalid_argument("train: batch must be >= 1");
    if (!(lr > 0)) throw std::invalid_argument("train: lr must be positive");
    if (weight_decay < 0) throw std::invalid_argument("train: weight decay must be >= 0");
    if (eval_every < 1) throw std::invalid_argument("train: eval_every must be >= 1");
    if (d_t < 2 || d_t % 2 != 0) throw std::invalid_argument("train: d_t must be even and >= 2");
    if (n_quantiles < 2) throw std::invalid_argument("train: n_quantiles must be >= 2");
    if (schedule_steps < 1) throw std::invalid_argument("train: schedule_steps must be >= 1");
    if (flow_sampling_steps < 1)
        throw std::invalid_argument("train: flow_sampling_steps must be >= 1");
    if (val_sample_rows < 1) throw std::invalid_argument("train: val_sample_rows must be >= 1");
}

namespace {

DdpmDenoiseFn model_eps_fn(const DenoiserParamsF& params, const TimeEmbedding& emb,
                           const NoiseSchedule& sched) {
    return [&params, emb, &sched](const Eigen::MatrixXd& z, int t) {
        const MatXf zf = z.cast<float>();
        const std::vector<double> taus(static_cast<size_t>(z.rows()),
                                       static_cast<double>(t) / static_cast<double>(sched.steps));
        return denoiser_forward(params, emb, zf, taus).cast<double>().eval();
    };
}

FlowFieldFn model_field_fn(const DenoiserParamsF& params, const TimeEmbedding& emb) {
    return [&params, emb](const Eigen::MatrixXd& z, double t) {
        const MatXf zf = z.cast<float>();
        const std::vector<double> taus(static_cast<size_t>(z.rows()), t);
        return denoiser_forward(params, emb, zf, taus).cast<double>().eval();
    };
}

EncodedMatrix sample_encoded_from(const DenoiserParamsF& params, const TimeEmbedding& emb,
                                  const NoiseSchedule& sched, Regime regime, int flow_steps,
                                  const std::vector<LayoutEntry>& layout, int d_enc,
                                  int64_t n_rows, uint64_t seed) {
    Eigen::MatrixXd rows =
        regime == Regime::Ddpm
            ? ddpm_sample_with(model_eps_fn(params, emb, sched), sched, d_enc, n_rows, seed)
            : flow_sample_with(model_field_fn(params, emb), d_enc, n_rows, flow_steps, seed);
    EncodedMatrix m;
    m.n_rows = n_rows;
    m.d_enc = d_enc;
    m.layout = layout;
    m.data.resize(static_cast<size_t>(n_rows) * static_cast<size_t>(d_enc));
    for (int64_t r = 0; r < n_rows; ++r)
        for (int j = 0; j < d_enc; ++j) m.at(r, j) = rows(r, j);
    return m;
}

}  // namespace

ModelCheckpoint train_model(const Table& train_table, const Table& val_table,
                            const TrainConfig& cfg, std::vector<TrainLogRow>* log) {
    cfg.validate();
    const auto& schema = train_table.schema();
    if (!(val_table.schema() == schema))
        throw std::invalid_argument("train: validation split has a different schema");

    ModelCheckpoint ckpt;
    ckpt.schema = schema;
    ckpt.codec = make_codec(cfg.codec, schema, cfg.codec_r_min, cfg.onehot_softmax);
    ckpt.qmap = train_table.n_numeric() > 0
                    ? fit_quantile(train_table, cfg.n_quantiles, cfg.seed)
                    : QuantileMap();
    ckpt.schedule = NoiseSchedule::linear(cfg.schedule_steps, cfg.beta_min, cfg.beta_max);
    ckpt.regime = cfg.regime;
    ckpt.flow_sampling_steps = cfg.flow_sampling_steps;

    const EncodedMatrix encoded = encode_table(train_table, ckpt.qmap, ckpt.codec);
    const int d_in = encoded.d_enc;
    const int64_t n = encoded.n_rows;

    MatXf z_all(n, d_in);
    for (int64_t r = 0; r < n; ++r)
        for (int j = 0; j < d_in; ++j) z_all(r, j) = static_cast<float>(encoded.at(r, j));

    const DenoiserDims dims{d_in, cfg.d_t};
    const TimeEmbedding emb{cfg.d_t};
    DenoiserParamsF params = DenoiserParamsF::init(dims, rng::key(cfg.seed, kParamsInit, 0));
    AdamState<float> opt = AdamState<float>::like(params, cfg.lr, cfg.weight_decay);

    DenoiserParamsF best_params = params;
    double best_score = -INFINITY;
    int64_t best_iteration = -1;
    double running_loss = 0.0;
    int64_t running_count = 0;
    double last_loss = 0.0;

    MatXf z0(cfg.batch, d_in);
    for (int64_t iter = 0; iter < cfg.iterations; ++iter) {
        // uniform batch sampling with replacement
        CounterRng pick(cfg.seed, substream(kBatchIndices, static_cast<uint64_t>(iter)));
        for (int r = 0; r < cfg.batch; ++r) {
            const int64_t src = static_cast<int64_t>(pick.next_below(static_cast<uint64_t>(n)));
            z0.row(r) = z_all.row(src);
        }

        LossAndGrads lg = cfg.regime == Regime::Ddpm
                              ? ddpm_loss(params, emb, z0, ckpt.schedule, cfg.seed, iter)
                              : flow_loss(params, emb, z0, cfg.seed, iter);
        if (!std::isfinite(lg.per_element) || lg.per_element > 1e6)
            throw std::runtime_error("train: diverged at iteration " + std::to_string(iter) +
                                     " (loss " + std::to_string(lg.per_element) + ")");
        adam_step(params, lg.grads, opt);
        last_loss = lg.per_element;
        running_loss += lg.per_element;
        ++running_count;

        const bool at_eval = (iter + 1) % cfg.eval_every == 0 || iter + 1 == cfg.iterations;
        const bool at_log = log && ((iter + 1) % cfg.log_every == 0 || iter + 1 == cfg.iterations);
        if (at_eval) {
            const int64_t rows = std::min<int64_t>(cfg.val_sample_rows, val_table.n_rows());
            const uint64_t sample_seed = rng::key(cfg.seed, kValSample, static_cast<uint64_t>(iter));
            double score = -INFINITY;
            try {
                EncodedMatrix sampled = sample_encoded_from(
                    params, emb, ckpt.schedule, cfg.regime, cfg.flow_sampling_steps,
                    encoded.layout, d_in, rows, sample_seed);
                const Table decoded = decode_matrix(sampled, ckpt.qmap, ckpt.codec, schema);
                score = mean_cde(val_table, decoded);
            } catch (const std::exception&) {
                score = -INFINITY;  // unusable sample; keep previous best
            }
            if (score > best_score) {
                best_score = score;
                best_params = params;
                best_iteration = iter + 1;
            }
            if (at_log) {
                log->push_back({iter + 1, running_loss / static_cast<double>(running_count), true,
                                score});
                running_loss = 0.0;
                running_count = 0;
            }
        } else if (at_log) {
            log->push_back(
                {iter + 1, running_loss / static_cast<double>(running_count), false, 0.0});
            running_loss = 0.0;
            running_count = 0;
        }
    }

    ckpt.params = best_iteration >= 0 ? best_params : params;
    ckpt.meta.seed = cfg.seed;
    ckpt.meta.iterations = cfg.iterations;
    ckpt.meta.best_iteration = best_iteration;
    ckpt.meta.val_score = best_score;
    ckpt.meta.final_loss = last_loss;
    ckpt.meta.skipped_steps = opt.skipped;
    return ckpt;
}

EncodedMatrix sample_encoded(const ModelCheckpoint& ckpt, int64_t n_rows, uint64_t seed,
                             std::optional<int> flow_steps) {
    const TimeEmbedding emb{ckpt.params.dims.d_t};
    const int d_enc = encoded_width(ckpt.schema, ckpt.codec);
    return sample_encoded_from(ckpt.params, emb, ckpt.schedule, ckpt.regime,
                               flow_steps.value_or(ckpt.flow_sampling_steps),
                               make_layout(ckpt.schema, ckpt.codec), d_enc, n_rows, seed);
}

SampleResult sample_table(const ModelCheckpoint& ckpt, int64_t n_rows, uint64_t seed,
                          std::optional<int> flow_steps) {
    const EncodedMatrix m = sample_encoded(ckpt, n_rows, seed, flow_steps);
    SampleResult out{decode_matrix(m, ckpt.qmap, ckpt.codec, ckpt.schema), ooi_rate(m, ckpt.codec)};
    return out;
}

}  // namespace tabrep
