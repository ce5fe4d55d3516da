#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "satrach/engine.hpp"

namespace py = pybind11;
using namespace satrach;

namespace {

CorrNorm norm_from(const std::string& name) {
    if (name == "sqrt_n") return CorrNorm::sqrt_n;
    if (name == "n") return CorrNorm::full_n;
    throw std::invalid_argument("norm must be 'sqrt_n' or 'n'");
}

ClassPosterior posterior_from(const std::vector<double>& p) {
    ClassPosterior post;
    post.p = p;
    return post;
}

ConfusionMatrix confusion_from(const std::vector<std::vector<double>>& rows) {
    ConfusionMatrix q;
    q.n_classes = static_cast<int>(rows.size());
    q.q.assign(static_cast<std::size_t>(q.n_classes) * q.n_classes, 0.0);
    q.column_defined.assign(static_cast<std::size_t>(q.n_classes), 1);
    for (int pred = 0; pred < q.n_classes; ++pred) {
        if (static_cast<int>(rows[static_cast<std::size_t>(pred)].size()) != q.n_classes)
            throw std::invalid_argument("confusion matrix must be square");
        for (int t = 0; t < q.n_classes; ++t) q.at(pred, t) = rows[static_cast<std::size_t>(pred)][static_cast<std::size_t>(t)];
    }
    return q;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Satellite random access toolkit: ZC preamble correlation, collision "
              "classification, opportunistic Step-3 policy and RACH protocol simulation.";

    py::class_<PrachConfig>(m, "PrachConfig")
        .def(py::init<>())
        .def_readwrite("n_zc", &PrachConfig::n_zc)
        .def_readwrite("n_cs", &PrachConfig::n_cs)
        .def_readwrite("roots", &PrachConfig::roots)
        .def_readwrite("n_ant", &PrachConfig::n_ant)
        .def_readwrite("sample_period_us", &PrachConfig::sample_period_us)
        .def_readwrite("tau_e_max", &PrachConfig::tau_e_max)
        .def("validate", &PrachConfig::validate)
        .def("n_preambles", &PrachConfig::n_preambles);

    m.def("zc_root", &zc_root_sequence, py::arg("root"), py::arg("n_zc"),
          "Zadoff-Chu root sequence as a list of complex samples.");
    m.def(
        "shifted_preamble",
        [](int root, int shift, const PrachConfig& cfg) {
            return shifted_preamble(Preamble{root, shift}, cfg);
        },
        py::arg("root"), py::arg("shift"), py::arg("cfg"));
    m.def(
        "cyclic_xcorr",
        [](const CxSeq& a, const CxSeq& b, const std::string& norm) {
            return cyclic_xcorr(a, b, norm_from(norm));
        },
        py::arg("a"), py::arg("b"), py::arg("norm") = "sqrt_n",
        "Cyclic cross-correlation magnitudes at every lag.");

    m.def(
        "binomial_prior",
        [](int d_hat, int n_pa, int k_max) { return binomial_prior(d_hat, n_pa, k_max).p; },
        py::arg("d_hat"), py::arg("n_pa"), py::arg("k_max"));
    m.def(
        "posterior",
        [](const std::vector<std::vector<double>>& q, const std::vector<double>& prior, int k_hat) {
            ClassPrior cp;
            cp.p = prior;
            return posterior(confusion_from(q), cp, k_hat).p;
        },
        py::arg("confusion"), py::arg("prior"), py::arg("k_hat"));
    m.def(
        "success_probability",
        [](double p_tx, const std::vector<double>& post) {
            return success_probability(p_tx, posterior_from(post));
        },
        py::arg("p_tx"), py::arg("posterior"));
    m.def(
        "optimal_access_prob",
        [](const std::vector<double>& post) { return optimal_access_prob(posterior_from(post)); },
        py::arg("posterior"), "Step-3 transmission probability maximizing the success probability.");
    m.def("estimate_active_users", &estimate_active_users, py::arg("k_hats"));

    m.def(
        "cnn_param_count",
        [](int n_ant, int n_cs, int n_classes) {
            ClassifierArch a;
            a.n_ant = n_ant;
            a.n_cs = n_cs;
            a.n_classes = n_classes;
            return a.param_count();
        },
        py::arg("n_ant"), py::arg("n_cs") = 8, py::arg("n_classes") = 7);
    m.def(
        "mlp_param_count",
        [](int n_cs, int n_classes) {
            MlpArch a;
            a.n_cs = n_cs;
            a.n_classes = n_classes;
            return a.param_count();
        },
        py::arg("n_cs") = 8, py::arg("n_classes") = 7);

    m.def(
        "gen_dataset",
        [](const PrachConfig& cfg, const std::string& profile, int k_max,
           const std::vector<double>& snr_grid, int n_per_class_per_snr, std::uint64_t seed,
           const std::string& path) {
            const Dataset ds = gen_dataset(cfg, TdlProfile::resolve(profile), k_max, snr_grid,
                                           n_per_class_per_snr, seed);
            save_dataset(ds, path);
            return ds.size();
        },
        py::arg("cfg"), py::arg("profile"), py::arg("k_max"), py::arg("snr_grid"),
        py::arg("n_per_class_per_snr"), py::arg("seed"), py::arg("path"),
        "Synthesize a labeled window dataset and write it to `path`.");

    m.def(
        "train_classifier",
        [](const std::string& dataset_path, const std::string& weights_out,
           const std::string& confusion_out, int epochs, double learning_rate, int batch_size,
           std::uint64_t seed, double train_fraction) {
            const Dataset ds = load_dataset(dataset_path);
            ClassifierArch arch;
            arch.n_ant = ds.n_ant;
            arch.n_cs = ds.n_cs;
            arch.n_classes = ds.k_max + 1;
            TrainConfig tc;
            tc.epochs = epochs;
            tc.learning_rate = learning_rate;
            tc.batch_size = batch_size;
            tc.seed = seed;
            const SplitIndices split = split_stratified(ds, train_fraction, seed);
            const TrainResult tr = train(arch, ds, split.train, tc);
            const EvalResult ev = evaluate(tr.weights, ds, split.test);
            save_weights(tr.weights, weights_out);
            save_confusion_csv(ev.confusion, confusion_out);
            return py::make_tuple(ev.accuracy, ev.misdetection_rate, ev.false_alarm_rate);
        },
        py::arg("dataset"), py::arg("weights_out"), py::arg("confusion_out"),
        py::arg("epochs") = 20, py::arg("learning_rate") = 1e-3, py::arg("batch_size") = 32,
        py::arg("seed") = 1, py::arg("train_fraction") = 0.7,
        "Train on a dataset file; returns (accuracy, misdetection, false_alarm) on the held-out "
        "split.");

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("n_users", &SimConfig::n_users)
        .def_readwrite("n_slots", &SimConfig::n_slots)
        .def_readwrite("slot_period_ms", &SimConfig::slot_period_ms)
        .def_readwrite("max_retries", &SimConfig::max_retries)
        .def_readwrite("snr_db", &SimConfig::snr_db)
        .def_readwrite("seed", &SimConfig::seed)
        .def_readwrite("k_max", &SimConfig::k_max)
        .def_readwrite("prach", &SimConfig::prach)
        .def_property(
            "scheme", [](const SimConfig& c) { return std::string(scheme_name(c.scheme)); },
            [](SimConfig& c, const std::string& name) { c.scheme = scheme_from_name(name); })
        .def_property(
            "detector", [](const SimConfig& c) { return std::string(detector_name(c.detector)); },
            [](SimConfig& c, const std::string& name) { c.detector = detector_from_name(name); })
        .def_property(
            "owd_range_ms",
            [](const SimConfig& c) { return py::make_tuple(c.geometry.owd_min_ms, c.geometry.owd_max_ms); },
            [](SimConfig& c, std::pair<double, double> r) {
                c.geometry.owd_min_ms = r.first;
                c.geometry.owd_max_ms = r.second;
            })
        .def_property(
            "profile", [](const SimConfig& c) { return c.profile.name; },
            [](SimConfig& c, const std::string& name) { c.profile = TdlProfile::resolve(name); });

    py::class_<SimMetrics>(m, "SimMetrics")
        .def_readonly("avg_delay_ms", &SimMetrics::avg_delay_ms)
        .def_readonly("success_delay_ms", &SimMetrics::success_delay_ms)
        .def_readonly("n_success", &SimMetrics::n_success)
        .def_readonly("n_failed", &SimMetrics::n_failed)
        .def_readonly("n_in_flight", &SimMetrics::n_in_flight)
        .def_readonly("grants_total", &SimMetrics::grants_total)
        .def_readonly("grants_success", &SimMetrics::grants_success)
        .def_readonly("pusch_utilization", &SimMetrics::pusch_utilization)
        .def_readonly("no_grants", &SimMetrics::no_grants)
        .def("__repr__", [](const SimMetrics& m) {
            std::ostringstream ss;
            ss << "SimMetrics(n_success=" << m.n_success << ", avg_delay_ms=" << m.avg_delay_ms
               << ", pusch_utilization=" << m.pusch_utilization << ")";
            return ss.str();
        });

    m.def(
        "run_scenario",
        [](const SimConfig& cfg, const std::string& weights_path, const std::string& confusion_path) {
            if (weights_path.empty()) return run_scenario(cfg).metrics;
            const Weights w = load_weights(weights_path);
            if (confusion_path.empty()) return run_scenario(cfg, &w).metrics;
            const ConfusionMatrix q = load_confusion_csv(confusion_path);
            return run_scenario(cfg, &w, &q).metrics;
        },
        py::arg("cfg"), py::arg("weights") = "", py::arg("confusion") = "",
        "Run one RACH scenario and return its metrics.");
}
