// Python extension. Structured values cross the boundary as JSON text; the
// package wrapper decodes them.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rgcnqa/graphbuild/build.h"
#include "rgcnqa/harness/dataset.h"
#include "rgcnqa/harness/synthetic.h"
#include "rgcnqa/harness/train.h"
#include "rgcnqa/numcore/checkpoint.h"

namespace py = pybind11;
using namespace rgcnqa;

namespace {

std::vector<Instance> instances_from(const std::vector<std::string>& records) {
  std::vector<Instance> out;
  for (const auto& r : records) out.push_back(instance_from_json(nlohmann::json::parse(r)));
  return out;
}

std::vector<std::string> records_of(const std::vector<Instance>& instances) {
  std::vector<std::string> out;
  for (const auto& in : instances) out.push_back(instance_to_json(in).dump());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Relational-graph multihop QA: graph construction, training and evaluation";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<EmbeddingError>(m, "EmbeddingError", PyExc_RuntimeError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_RuntimeError);
  py::register_exception<GraphFormatError>(m, "GraphFormatError", PyExc_RuntimeError);

  m.def("load_dataset", [](const std::filesystem::path& p) { return records_of(load_dataset(p)); }, py::arg("path"),
        "Instance records of a JSON-lines file, each as JSON text.");

  m.def("gen_synthetic",
        [](const std::string& spec) { return records_of(gen_synthetic(synthetic_spec_from_json(nlohmann::json::parse(spec)))); },
        py::arg("spec_json"), "Synthetic instances for a generator spec given as JSON text.");

  m.def("build_graph",
        [](const std::string& record, const std::string& setting, std::size_t max_path_docs) {
          GraphConfig gc = config_for_setting(setting);
          gc.max_path_docs = max_path_docs;
          return serialize_graph(build_graph(instance_from_json(nlohmann::json::parse(record)), gc));
        },
        py::arg("instance_json"), py::arg("setting") = "base", py::arg("max_path_docs") = 3,
        "Serialized relational graph of one instance.");

  m.def("graph_stats",
        [](const std::vector<std::string>& graphs) {
          std::vector<RelGraph> gs;
          for (const auto& g : graphs) gs.push_back(deserialize_graph(g));
          const GraphStats st = graph_stats(gs);
          nlohmann::json rel = nlohmann::json::object(), kinds = nlohmann::json::object();
          for (std::size_t r = 0; r < kRelationCount; ++r) {
            rel[std::string(relation_name(static_cast<Relation>(r)))] = st.relation_totals[r];
          }
          for (std::size_t k = 0; k < st.node_kind_totals.size(); ++k) {
            kinds[std::string(node_kind_name(static_cast<NodeKind>(k)))] = st.node_kind_totals[k];
          }
          return nlohmann::json{{"graphs", st.graphs}, {"mean_nodes", st.mean_nodes}, {"mean_edges", st.mean_edges},
                                {"node_kinds", kinds}, {"relations", rel}}
              .dump();
        },
        py::arg("graphs"), "Summary of serialized graphs as JSON text.");

  m.def("train",
        [](const std::filesystem::path& config) {
          const RunConfig rc = load_run_config(config);
          if (rc.output_dir.empty()) throw ValidationError("run config needs an output_dir");
          const TrainMetrics tm = run_training(rc);
          return nlohmann::json{{"best_dev_acc", tm.best_dev_acc},
                                {"best_epoch", tm.best_epoch},
                                {"epochs_run", tm.epochs.size()},
                                {"stopped_early", tm.stopped_early},
                                {"output_dir", rc.output_dir.generic_string()}}
              .dump();
        },
        py::arg("config_path"), py::call_guard<py::gil_scoped_release>(),
        "Train from a run config file; returns a JSON summary.");

  m.def("evaluate",
        [](const std::filesystem::path& checkpoint, const std::vector<std::string>& records) {
          const auto data = instances_from(records);
          const EvalResult r = evaluate_checkpoint(checkpoint, data);
          return std::pair(r.accuracy, predictions_to_jsonl(r, data));
        },
        py::arg("checkpoint"), py::arg("instances"),
        "Accuracy and JSON-lines predictions of a checkpoint on instance records.");
}
