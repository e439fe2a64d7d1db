#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tabrep/cli.hpp"
#include "tabrep/generative.hpp"
#include "tabrep/geometry.hpp"
#include "tabrep/metrics.hpp"
#include "tabrep/table.hpp"

namespace py = pybind11;
using namespace tabrep;

namespace {

py::array_t<double> numeric_array(const Table& t) {
    const auto n = static_cast<py::ssize_t>(t.n_rows());
    const auto d = static_cast<py::ssize_t>(t.n_numeric());
    py::array_t<double> out({n, d});
    auto view = out.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < n; ++i)
        for (py::ssize_t j = 0; j < d; ++j) view(i, j) = t.num(i, static_cast<int>(j));
    return out;
}

py::array_t<int32_t> categorical_array(const Table& t) {
    const auto n = static_cast<py::ssize_t>(t.n_rows());
    const auto d = static_cast<py::ssize_t>(t.n_categorical());
    py::array_t<int32_t> out({n, d});
    auto view = out.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < n; ++i)
        for (py::ssize_t j = 0; j < d; ++j) view(i, j) = t.cat(i, static_cast<int>(j));
    return out;
}

Table table_from_arrays(const std::string& schema_json, py::array_t<double> numeric,
                        py::array_t<int32_t> categorical) {
    const TableSchema schema = TableSchema::from_json(schema_json);
    const auto num = numeric.unchecked<2>();
    const auto cat = categorical.unchecked<2>();
    const int64_t n = num.shape(0) > 0 ? num.shape(0) : cat.shape(0);
    std::vector<double> numeric_data;
    numeric_data.reserve(static_cast<size_t>(num.shape(0) * num.shape(1)));
    for (py::ssize_t i = 0; i < num.shape(0); ++i)
        for (py::ssize_t j = 0; j < num.shape(1); ++j) numeric_data.push_back(num(i, j));
    std::vector<int32_t> categorical_data;
    categorical_data.reserve(static_cast<size_t>(cat.shape(0) * cat.shape(1)));
    for (py::ssize_t i = 0; i < cat.shape(0); ++i)
        for (py::ssize_t j = 0; j < cat.shape(1); ++j) categorical_data.push_back(cat(i, j));
    return Table(schema, std::move(numeric_data), std::move(categorical_data), n);
}

TrainConfig config_from_kwargs(int64_t iterations, int batch, double lr, double weight_decay,
                               const std::string& regime, uint64_t seed, int64_t eval_every,
                               const std::string& codec, int d_t, int n_quantiles,
                               int schedule_steps, int flow_sampling_steps) {
    TrainConfig cfg;
    cfg.iterations = iterations;
    cfg.batch = batch;
    cfg.lr = lr;
    cfg.weight_decay = weight_decay;
    cfg.regime = regime_from_string(regime);
    cfg.seed = seed;
    cfg.eval_every = eval_every;
    cfg.codec = codec_kind_from_string(codec);
    cfg.d_t = d_t;
    cfg.n_quantiles = n_quantiles;
    cfg.schedule_steps = schedule_steps;
    cfg.flow_sampling_steps = flow_sampling_steps;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "tabular diffusion / flow-matching synthesizer core";

    py::class_<Table>(m, "Table")
        .def_static("load_csv",
                    [](const std::string& path, const std::string& schema_json) {
                        return load_csv(path, TableSchema::from_json(schema_json));
                    },
                    py::arg("path"), py::arg("schema_json"))
        .def_static("from_arrays", &table_from_arrays, py::arg("schema_json"), py::arg("numeric"),
                    py::arg("categorical"))
        .def_property_readonly("n_rows", &Table::n_rows)
        .def_property_readonly("dropped_rows", &Table::dropped_rows)
        .def_property_readonly("schema_json", [](const Table& t) { return t.schema().to_json(); })
        .def_property_readonly("numeric", &numeric_array)
        .def_property_readonly("categorical", &categorical_array)
        .def("select_rows", &Table::select_rows, py::arg("rows"))
        .def("to_csv", [](const Table& t, const std::string& path) { write_csv(t, path); },
             py::arg("path"))
        .def("__len__", &Table::n_rows)
        .def("__repr__", [](const Table& t) {
            return "<Table rows=" + std::to_string(t.n_rows()) + " numeric=" +
                   std::to_string(t.n_numeric()) + " categorical=" +
                   std::to_string(t.n_categorical()) + ">";
        });

    m.def("infer_schema",
          [](const std::string& path, int threshold) {
              return infer_schema(path, threshold).to_json();
          },
          py::arg("path"), py::arg("threshold") = 20);

    m.def("split",
          [](const Table& t, double train, double validation, double test, uint64_t seed) {
              const SplitIndices idx = split(t, {train, validation, test}, seed);
              return py::make_tuple(idx.train, idx.validation, idx.test);
          },
          py::arg("table"), py::arg("train") = 0.8, py::arg("validation") = 0.1,
          py::arg("test") = 0.1, py::arg("seed") = 0);

    py::class_<ModelCheckpoint>(m, "Checkpoint")
        .def_static("load", &load_checkpoint, py::arg("path"))
        .def("save", [](const ModelCheckpoint& c, const std::string& path) {
                 save_checkpoint(path, c);
             },
             py::arg("path"))
        .def_property_readonly("regime",
                               [](const ModelCheckpoint& c) { return to_string(c.regime); })
        .def_property_readonly("schema_json",
                               [](const ModelCheckpoint& c) { return c.schema.to_json(); })
        .def_property_readonly("val_score",
                               [](const ModelCheckpoint& c) { return c.meta.val_score; })
        .def_property_readonly("best_iteration",
                               [](const ModelCheckpoint& c) { return c.meta.best_iteration; })
        .def_property_readonly("seed", [](const ModelCheckpoint& c) { return c.meta.seed; });

    m.def("train",
          [](const Table& train_table, const Table& val_table, int64_t iterations, int batch,
             double lr, double weight_decay, const std::string& regime, uint64_t seed,
             int64_t eval_every, const std::string& codec, int d_t, int n_quantiles,
             int schedule_steps, int flow_sampling_steps) {
              const TrainConfig cfg =
                  config_from_kwargs(iterations, batch, lr, weight_decay, regime, seed, eval_every,
                                     codec, d_t, n_quantiles, schedule_steps, flow_sampling_steps);
              py::gil_scoped_release release;
              return train_model(train_table, val_table, cfg);
          },
          py::arg("train_table"), py::arg("val_table"), py::arg("iterations") = 100000,
          py::arg("batch") = 4096, py::arg("lr") = 1e-4, py::arg("weight_decay") = 5e-4,
          py::arg("regime") = "ddpm", py::arg("seed") = 0, py::arg("eval_every") = 1000,
          py::arg("codec") = "catconverter", py::arg("d_t") = 1024, py::arg("n_quantiles") = 1000,
          py::arg("schedule_steps") = 1000, py::arg("flow_sampling_steps") = 50);

    m.def("sample",
          [](const ModelCheckpoint& ckpt, int64_t n, uint64_t seed, std::optional<int> flow_steps) {
              SampleResult res = [&] {
                  py::gil_scoped_release release;
                  return sample_table(ckpt, n, seed, flow_steps);
              }();
              return py::make_tuple(std::move(res.table), res.ooi_rates);
          },
          py::arg("checkpoint"), py::arg("n"), py::arg("seed") = 0,
          py::arg("flow_steps") = py::none());

    m.def("mean_cde", &mean_cde, py::arg("real"), py::arg("syn"));
    m.def("pcc_score",
          [](const Table& real, const Table& syn, int bins) {
              return pcc_score(real, syn, BinningSpec{bins});
          },
          py::arg("real"), py::arg("syn"), py::arg("bins") = 20);
    m.def("c2st", &c2st, py::arg("real"), py::arg("syn"), py::arg("seed") = 0);
    m.def("mia",
          [](const Table& train, const Table& holdout, const Table& syn, uint64_t seed) {
              const MiaResult r = mia(train, holdout, syn, seed);
              return py::make_tuple(r.precision, r.recall);
          },
          py::arg("train"), py::arg("holdout"), py::arg("syn"), py::arg("seed") = 0);
    m.def("mle",
          [](const Table& train, const Table& test) {
              const MleResult r = mle(train, test);
              return py::make_tuple(r.value, r.metric);
          },
          py::arg("train"), py::arg("test"));
    m.def("full_report",
          [](const Table& train, const Table& test, const Table& syn,
             const std::vector<uint64_t>& seeds) {
              py::gil_scoped_release release;
              return full_report(train, test, syn, seeds).to_json();
          },
          py::arg("train"), py::arg("test"), py::arg("syn"), py::arg("seeds"));
    m.def("kst", &kst, py::arg("a"), py::arg("b"));
    m.def("tvd_counts", &tvd, py::arg("counts_a"), py::arg("counts_b"));

    m.def("cat_encode",
          [](const std::string& kind, int32_t c, int k) {
              CategoricalCodec codec;
              codec.kind = codec_kind_from_string(kind);
              return cat_encode(codec, c, k);
          },
          py::arg("kind"), py::arg("c"), py::arg("k"));
    m.def("cat_decode",
          [](const std::string& kind, const std::vector<double>& v, int k) {
              CategoricalCodec codec;
              codec.kind = codec_kind_from_string(kind);
              bool ooi = false;
              const int32_t idx = cat_decode(codec, v, k, &ooi);
              return py::make_tuple(idx, ooi);
          },
          py::arg("kind"), py::arg("v"), py::arg("k"));
    m.def("codec_width",
          [](const std::string& kind, int k) {
              return codec_width(codec_kind_from_string(kind), k);
          },
          py::arg("kind"), py::arg("k"));

    m.def("count_minimal_singular_points", &count_minimal_singular_points, py::arg("k"));
    m.def("hyperplane_dim", &hyperplane_dim, py::arg("k"), py::arg("n"));
    m.def("minimal_singular_point",
          [](int k, const std::vector<int>& subset, double alpha, double sigma) {
              SingularConfig cfg;
              cfg.k = k;
              cfg.subset = subset;
              cfg.alpha = alpha;
              cfg.sigma = sigma;
              return minimal_singular_point(cfg);
          },
          py::arg("k"), py::arg("subset"), py::arg("alpha") = 1.0, py::arg("sigma") = 1.0);
    m.def("score_variance_closed_form",
          [](int k, int n, double alpha, double sigma) {
              SingularConfig cfg;
              cfg.k = k;
              cfg.alpha = alpha;
              cfg.sigma = sigma;
              for (int i = 0; i < n; ++i) cfg.subset.push_back(i);
              return score_variance_closed_form(cfg);
          },
          py::arg("k"), py::arg("n"), py::arg("alpha") = 1.0, py::arg("sigma") = 1.0);
    m.def("score_variance_exact",
          [](const std::vector<double>& x, double alpha, double sigma,
             const std::vector<int>& support, std::optional<std::vector<double>> weights) {
              const PriorSpec prior = weights ? PriorSpec::categorical(*weights)
                                              : PriorSpec::uniform();
              return score_variance_exact(x, alpha, sigma, support, prior);
          },
          py::arg("x"), py::arg("alpha"), py::arg("sigma"), py::arg("support"),
          py::arg("weights") = py::none());
    m.def("singular_report",
          [](int k, double alpha, double sigma, const std::string& out) {
              const auto rows = singular_report(k, alpha, sigma, out);
              py::list result;
              for (const auto& r : rows)
                  result.append(py::make_tuple(r.k, r.n, r.subset_id, r.closed_form, r.exact,
                                               r.abs_err));
              return result;
          },
          py::arg("k"), py::arg("alpha") = 1.0, py::arg("sigma") = 0.2, py::arg("out") = "");

    m.def("run_cli", [](const std::vector<std::string>& args) { return run_cli(args); },
          py::arg("args"));
}
