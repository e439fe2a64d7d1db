#include <cstring>
#include <stdexcept>

#include "json.hpp"
#include "tabrep/generative.hpp"
#include "tabrep/io.hpp"

namespace tabrep {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr char kMagic[5] = {'T', 'R', 'E', 'P', '1'};

void append_u64(std::string& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t read_u64(const std::string& buf, size_t at) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[at + static_cast<size_t>(i)]))
             << (8 * i);
    return v;
}

template <typename T>
void append_raw(std::string& buf, const T* data, size_t count) {
    const size_t bytes = count * sizeof(T);
    const size_t at = buf.size();
    buf.resize(at + bytes);
    std::memcpy(buf.data() + at, data, bytes);
}

template <typename T>
void read_raw(const std::string& buf, size_t& at, T* data, size_t count) {
    const size_t bytes = count * sizeof(T);
    if (at + bytes > buf.size()) throw std::runtime_error("checkpoint: truncated payload");
    std::memcpy(data, buf.data() + at, bytes);
    at += bytes;
}

const char* tensor_names[12] = {"in_proj.w", "in_proj.b", "fc1.w", "fc1.b", "fc2.w", "fc2.b",
                                "fc3.w",     "fc3.b",     "fc4.w", "fc4.b", "out.w", "out.b"};

}  // namespace

void save_checkpoint(const std::string& path, const ModelCheckpoint& ckpt) {
    ordered_json manifest;
    manifest["format"] = 1;
    manifest["regime"] = to_string(ckpt.regime);
    manifest["flow_sampling_steps"] = ckpt.flow_sampling_steps;
    manifest["schema"] = ordered_json::parse(ckpt.schema.to_json());

    ordered_json codec;
    codec["kind"] = to_string(ckpt.codec.kind);
    codec["r_min"] = ckpt.codec.r_min;
    codec["softmax_relaxation"] = ckpt.codec.softmax_relaxation;
    codec["cardinalities"] = ckpt.codec.cardinalities;
    codec["widths"] = ckpt.codec.widths;
    manifest["codec"] = codec;

    ordered_json quantile;
    quantile["clip"] = ckpt.qmap.clip();
    quantile["columns"] = ordered_json::array();
    for (int j = 0; j < ckpt.qmap.n_columns(); ++j) {
        const auto& col = ckpt.qmap.column(j);
        quantile["columns"].push_back(
            {{"n_refs", col.refs.size()}, {"constant", col.constant}});
    }
    manifest["quantile"] = quantile;

    manifest["schedule"] = {{"steps", ckpt.schedule.steps},
                            {"beta_min", ckpt.schedule.beta_min},
                            {"beta_max", ckpt.schedule.beta_max}};

    ordered_json denoiser;
    denoiser["d_in"] = ckpt.params.dims.d_in;
    denoiser["d_t"] = ckpt.params.dims.d_t;
    denoiser["tensors"] = ordered_json::array();
    {
        int idx = 0;
        ckpt.params.visit([&](const MatX<float>& t) {
            denoiser["tensors"].push_back({{"name", tensor_names[idx]},
                                           {"rows", t.rows()},
                                           {"cols", t.cols()},
                                           {"dtype", "f32"}});
            ++idx;
        });
    }
    manifest["denoiser"] = denoiser;

    manifest["meta"] = {{"seed", ckpt.meta.seed},
                        {"iterations", ckpt.meta.iterations},
                        {"best_iteration", ckpt.meta.best_iteration},
                        {"val_score", ckpt.meta.val_score},
                        {"final_loss", ckpt.meta.final_loss},
                        {"skipped_steps", ckpt.meta.skipped_steps}};

    const std::string manifest_text = manifest.dump();

    std::string buf;
    buf.append(kMagic, sizeof(kMagic));
    append_u64(buf, manifest_text.size());
    buf += manifest_text;
    for (int j = 0; j < ckpt.qmap.n_columns(); ++j) {
        const auto& refs = ckpt.qmap.column(j).refs;
        append_raw(buf, refs.data(), refs.size());
    }
    ckpt.params.visit([&](const MatX<float>& t) {
        append_raw(buf, t.data(), static_cast<size_t>(t.size()));
    });

    atomic_write_file(path, buf);
}

ModelCheckpoint load_checkpoint(const std::string& path) {
    const std::string buf = read_file(path);
    if (buf.size() < sizeof(kMagic) + 8 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const uint64_t manifest_size = read_u64(buf, sizeof(kMagic));
    size_t at = sizeof(kMagic) + 8;
    if (at + manifest_size > buf.size()) throw std::runtime_error("checkpoint: truncated manifest");
    const ordered_json manifest = ordered_json::parse(buf.substr(at, manifest_size));
    at += manifest_size;
    if (manifest.at("format").get<int>() != 1)
        throw std::runtime_error("checkpoint: unsupported format version");

    ModelCheckpoint ckpt;
    ckpt.regime = regime_from_string(manifest.at("regime").get<std::string>());
    ckpt.flow_sampling_steps = manifest.at("flow_sampling_steps").get<int>();
    ckpt.schema = TableSchema::from_json(manifest.at("schema").dump());

    const auto& jc = manifest.at("codec");
    ckpt.codec.kind = codec_kind_from_string(jc.at("kind").get<std::string>());
    ckpt.codec.r_min = jc.at("r_min").get<double>();
    ckpt.codec.softmax_relaxation = jc.at("softmax_relaxation").get<bool>();
    ckpt.codec.cardinalities = jc.at("cardinalities").get<std::vector<int>>();
    ckpt.codec.widths = jc.at("widths").get<std::vector<int>>();

    const auto& jq = manifest.at("quantile");
    std::vector<QuantileMap::Column> cols;
    for (const auto& jcol : jq.at("columns")) {
        QuantileMap::Column col;
        col.refs.resize(jcol.at("n_refs").get<size_t>());
        col.constant = jcol.at("constant").get<bool>();
        read_raw(buf, at, col.refs.data(), col.refs.size());
        cols.push_back(std::move(col));
    }

    const auto& js = manifest.at("schedule");
    ckpt.schedule = NoiseSchedule::linear(js.at("steps").get<int>(),
                                          js.at("beta_min").get<double>(),
                                          js.at("beta_max").get<double>());

    const auto& jd = manifest.at("denoiser");
    const DenoiserDims dims{jd.at("d_in").get<int>(), jd.at("d_t").get<int>()};
    ckpt.params = DenoiserParamsF::zeros(dims);
    {
        const auto& tensors = jd.at("tensors");
        int idx = 0;
        ckpt.params.visit([&](MatX<float>& t) {
            const auto& jt = tensors.at(idx);
            if (jt.at("rows").get<Eigen::Index>() != t.rows() ||
                jt.at("cols").get<Eigen::Index>() != t.cols() ||
                jt.at("dtype").get<std::string>() != "f32")
                throw std::runtime_error("checkpoint: tensor shape mismatch at " +
                                         jt.at("name").get<std::string>());
            read_raw(buf, at, t.data(), static_cast<size_t>(t.size()));
            ++idx;
        });
    }
    if (at != buf.size()) throw std::runtime_error("checkpoint: trailing bytes in " + path);

    // quantile map needs the clip restored with its columns
    ckpt.qmap = QuantileMap(std::move(cols), jq.at("clip").get<double>());

    const auto& jm = manifest.at("meta");
    ckpt.meta.seed = jm.at("seed").get<uint64_t>();
    ckpt.meta.iterations = jm.at("iterations").get<int64_t>();
    ckpt.meta.best_iteration = jm.at("best_iteration").get<int64_t>();
    ckpt.meta.val_score = jm.at("val_score").get<double>();
    ckpt.meta.final_loss = jm.at("final_loss").get<double>();
    ckpt.meta.skipped_steps = jm.at("skipped_steps").get<int64_t>();

    return ckpt;
}

}  // namespace tabrep
