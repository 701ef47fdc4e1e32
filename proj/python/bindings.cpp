#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "click2state/commands.hpp"
#include "click2state/common.hpp"
#include "click2state/evaluation.hpp"
#include "click2state/interpret.hpp"
#include "click2state/synthgen.hpp"
#include "click2state/topics.hpp"
#include "click2state/training.hpp"

namespace py = pybind11;
using namespace click2state;

namespace {

std::vector<std::string> paths(const CommandOutput& o) {
  std::vector<std::string> out;
  for (const auto& p : o.files) out.push_back(p.string());
  return out;
}

RunConfig make_config(const std::string& json, std::optional<std::uint64_t> seed) {
  auto cfg = run_config_from_json(json.empty() ? "{}" : json);
  if (seed) cfg.set_seed(*seed);
  cfg.validate();
  return cfg;
}

std::vector<FeatureVector> rows_of(const Eigen::MatrixXd& m) {
  if (m.cols() != kFeatureDim) throw DataError("expected " + std::to_string(kFeatureDim) + " feature columns");
  std::vector<FeatureVector> seq;
  for (Eigen::Index t = 0; t < m.rows(); ++t) seq.push_back(m.row(t).transpose());
  return seq;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Click2State core: synthetic cohorts, LDA topics, multi-task GRU training and analysis";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.attr("FEATURE_DIM") = kFeatureDim;

  m.def(
      "auc", [](const std::vector<double>& s, const std::vector<int>& y) { return auc(s, y); }, py::arg("scores"),
      py::arg("labels"), "Mann-Whitney AUC with ties counted as one half.");
  m.def(
      "bootstrap_auc_diff",
      [](const std::vector<double>& a, const std::vector<double>& b, const std::vector<int>& y, int n_boot,
         std::uint64_t seed) {
        const auto r = bootstrap_auc_diff({PairedScores{a, b, y}}, n_boot, seed);
        return py::make_tuple(r.delta, r.p_value);
      },
      py::arg("scores_a"), py::arg("scores_b"), py::arg("labels"), py::arg("n_boot") = 1000, py::arg("seed") = 0,
      "Paired bootstrap of AUC(a) - AUC(b); returns (delta, p_value).");
  m.def(
      "kld",
      [](const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_hat) {
        return kld_loss(TopicDistribution{theta}, TopicDistribution{theta_hat});
      },
      py::arg("theta"), py::arg("theta_hat"));
  m.def("bce", &bce_loss, py::arg("label"), py::arg("prob"));

  m.def(
      "generate_jsonl",
      [](const std::string& synth_json) {
        const auto cfg = synth_config_from_json(synth_json.empty() ? "{}" : synth_json);
        std::ostringstream out;
        write_dataset(out, generate_dataset(build_generator(cfg), cfg));
        return out.str();
      },
      py::arg("synth_config") = "", "Synthetic cohort as JSONL text.");
  m.def(
      "dataset_summary",
      [](const std::filesystem::path& path) {
        const auto d = load_dataset(path);
        return py::dict(py::arg("n_students") = d.size(), py::arg("n_fail") = d.count_label(1),
                        py::arg("term_length") = d.term_length);
      },
      py::arg("path"));

  py::class_<ModelParams>(m, "Model")
      .def_static(
          "load", [](const std::filesystem::path& p) { return load_checkpoint(p); }, py::arg("path"))
      .def_readonly("hidden", &ModelParams::hidden)
      .def_readonly("num_topics", &ModelParams::num_topics)
      .def_property_readonly("week_cutoff", [](const ModelParams& p) { return p.meta.week_cutoff; })
      .def_property_readonly("lambda_", [](const ModelParams& p) { return p.meta.lambda; })
      .def(
          "forward",
          [](const ModelParams& p, const Eigen::MatrixXd& features) {
            const auto f = forward(p, rows_of(features));
            Eigen::MatrixXd states(static_cast<Eigen::Index>(f.states.size()), p.hidden);
            Eigen::MatrixXd topics(static_cast<Eigen::Index>(f.states.size()), p.num_topics);
            for (std::size_t t = 0; t < f.states.size(); ++t) {
              states.row(static_cast<Eigen::Index>(t)) = f.states[t].transpose();
              topics.row(static_cast<Eigen::Index>(t)) = f.topic_preds[t].probs.transpose();
            }
            return py::make_tuple(f.fail_prob, states, topics);
          },
          py::arg("features"), "Normalized T x 31 features -> (fail_prob, states T x H, topic probs T x K).")
      .def(
          "fail_prob", [](const ModelParams& p, const Eigen::VectorXd& h) { return predict_fail(p, h); },
          py::arg("state"));
  m.def(
      "init_model", [](int hidden, int topics, std::uint64_t seed) { return init_params(hidden, topics, seed); },
      py::arg("hidden"), py::arg("num_topics"), py::arg("seed") = 0);

  // Pipeline commands; each returns the list of files written.
  m.def(
      "synth",
      [](const std::string& config, const std::filesystem::path& out, std::optional<std::uint64_t> seed) {
        return paths(cmd_synth(make_config(config, seed), out));
      },
      py::arg("config"), py::arg("out"), py::arg("seed") = py::none());
  m.def(
      "lda",
      [](const std::string& config, const std::filesystem::path& data, const std::filesystem::path& out,
         std::optional<std::uint64_t> seed) { return paths(cmd_lda(make_config(config, seed), data, out)); },
      py::arg("config"), py::arg("data"), py::arg("out"), py::arg("seed") = py::none());
  m.def(
      "train",
      [](const std::string& config, const std::filesystem::path& data, const std::filesystem::path& topic_model,
         const std::filesystem::path& out, std::optional<double> lambda, std::optional<std::uint64_t> seed) {
        return paths(cmd_train(make_config(config, seed), data, topic_model, out, lambda));
      },
      py::arg("config"), py::arg("data"), py::arg("topic_model"), py::arg("out"), py::arg("lambda_") = py::none(),
      py::arg("seed") = py::none());
  m.def(
      "evaluate",
      [](const std::string& config, const std::filesystem::path& checkpoints, const std::filesystem::path& data,
         const std::filesystem::path& topic_model, const std::filesystem::path& out,
         std::optional<std::uint64_t> seed) {
        return paths(cmd_eval(make_config(config, seed), checkpoints, data, topic_model, out));
      },
      py::arg("config"), py::arg("checkpoints"), py::arg("data"), py::arg("topic_model"), py::arg("out"),
      py::arg("seed") = py::none());
  m.def(
      "analyze",
      [](const std::string& config, const std::filesystem::path& checkpoint, const std::filesystem::path& data,
         const std::filesystem::path& out, std::optional<std::uint64_t> seed) {
        return paths(cmd_analyze(make_config(config, seed), checkpoint, data, out));
      },
      py::arg("config"), py::arg("checkpoint"), py::arg("data"), py::arg("out"), py::arg("seed") = py::none());
}
