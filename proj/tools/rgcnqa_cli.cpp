// Command-line front end. Exit codes: 0 success, 1 validation or I/O error,
// 2 numerical failure.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "rgcnqa/graphbuild/build.h"
#include "rgcnqa/harness/dataset.h"
#include "rgcnqa/harness/grid.h"
#include "rgcnqa/harness/synthetic.h"
#include "rgcnqa/harness/train.h"

using namespace rgcnqa;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kNumeric = 2;

constexpr const char* kGraphSuffix = ".graph.json";

std::string file_stem_for(std::size_t index, const std::string& id) {
  std::string safe = id;
  std::replace_if(safe.begin(), safe.end(), [](char c) { return !(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'); }, '_');
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "%06zu_", index);
  return prefix + safe;
}

int cmd_build_graphs(const std::string& instances, const std::string& out, bool reason, bool sents,
                     std::size_t max_path_docs, const std::string& ner) {
  std::vector<std::string> warnings;
  const auto data = load_dataset(instances, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  GraphConfig gc;
  gc.use_reasoning = reason;
  gc.use_sentences = sents;
  gc.max_path_docs = max_path_docs;
  gc.ner_mode = ner == "provided" ? NerMode::provided : NerMode::heuristic;
  fs::create_directories(out);
  std::vector<RelGraph> graphs;
  for (std::size_t i = 0; i < data.size(); ++i) {
    RelGraph g = build_graph(data[i], gc);
    write_text_file(fs::path(out) / (file_stem_for(i, data[i].id) + kGraphSuffix), serialize_graph(g));
    graphs.push_back(std::move(g));
  }
  std::cout << "wrote " << graphs.size() << " graphs (" << setting_name(gc) << ") to " << out << '\n';
  return kOk;
}

int cmd_stats(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ValidationError(dir + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > std::string(kGraphSuffix).size() &&
        name.ends_with(kGraphSuffix)) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError(dir + " holds no graph files");
  std::vector<RelGraph> graphs;
  for (const auto& f : files) {
    try {
      graphs.push_back(deserialize_graph(read_text_file(f)));
    } catch (const GraphFormatError& e) {
      throw ValidationError(f.string() + ": " + e.what());
    }
  }
  const GraphStats st = graph_stats(graphs);
  nlohmann::json rel = nlohmann::json::object(), kinds = nlohmann::json::object();
  for (std::size_t r = 0; r < kRelationCount; ++r) rel[std::string(relation_name(static_cast<Relation>(r)))] = st.relation_totals[r];
  for (std::size_t k = 0; k < st.node_kind_totals.size(); ++k) {
    kinds[std::string(node_kind_name(static_cast<NodeKind>(k)))] = st.node_kind_totals[k];
  }
  const nlohmann::json out{{"graphs", st.graphs}, {"mean_nodes", st.mean_nodes}, {"mean_edges", st.mean_edges},
                           {"node_kinds", kinds}, {"relations", rel}};
  std::cout << out.dump(2) << '\n';
  return kOk;
}

int cmd_gen_synthetic(const std::string& spec_path, const std::string& out) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(spec_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(spec_path + ": not valid JSON: " + e.what());
  }
  const auto data = gen_synthetic(synthetic_spec_from_json(j));
  write_dataset(out, data);
  std::cout << "wrote " << data.size() << " instances to " << out << '\n';
  return kOk;
}

struct TrainOverrides {
  std::optional<std::size_t> epochs, batch_size, patience;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  bool record_time = false;
};

int cmd_train(const std::string& config_path, const TrainOverrides& o) {
  RunConfig rc = load_run_config(config_path);
  if (o.epochs) rc.epochs = *o.epochs;
  if (o.batch_size) rc.batch_size = *o.batch_size;
  if (o.patience) rc.patience = *o.patience;
  if (o.lr) rc.lr = *o.lr;
  if (o.seed) rc.model.seed = *o.seed;
  if (o.output_dir) rc.output_dir = *o.output_dir;
  if (o.record_time) rc.record_time = true;
  if (rc.output_dir.empty()) throw ValidationError("train needs an output_dir (config field or --output-dir)");
  const TrainMetrics m = run_training(rc);
  std::cout << nlohmann::json{{"best_dev_acc", m.best_dev_acc},
                              {"best_epoch", m.best_epoch},
                              {"epochs_run", m.epochs.size()},
                              {"output_dir", rc.output_dir.generic_string()}}
                   .dump()
            << '\n';
  return kOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_path, const std::string& predictions,
             const std::string& errors, const std::string& config_path) {
  std::vector<std::string> warnings;
  const auto data = load_dataset(data_path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  if (data.empty()) throw ValidationError("nothing to evaluate in " + data_path);
  std::optional<ModelConfig> expected;
  if (!config_path.empty()) {
    RunConfig rc = load_run_config(config_path);
    const EmbedSpec spec = load_embed_spec(rc.embeddings, rc.model.embed_spec);
    resolve_input_dim(rc.model, spec);
    expected = rc.model;
  }
  const EvalResult r = evaluate_checkpoint(checkpoint, data, expected);
  if (!predictions.empty()) write_text_file(predictions, predictions_to_jsonl(r, data));
  if (!errors.empty()) write_text_file(errors, errors_to_jsonl(r, data));
  std::cout << nlohmann::json{{"accuracy", r.accuracy}, {"correct", r.correct}, {"total", data.size()}}.dump() << '\n';
  return kOk;
}

int cmd_grid(const std::string& spec_path, std::optional<std::size_t> threads) {
  GridSpec spec = load_grid_spec(spec_path);
  if (threads) spec.threads = *threads;
  if (spec.threads == 0) throw ValidationError("--threads must be positive");
  const auto rows = run_grid(spec);
  std::cout << render_grid_table(rows);
  int code = kOk;
  for (const auto& r : rows) {
    if (r.best_dev_acc) continue;
    std::cerr << "cell " << r.cell.name() << " failed: " << r.error << '\n';
    code = std::max(code, r.numeric_failure ? kNumeric : kValidation);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relational graph construction, training and evaluation for multihop QA"};
  app.require_subcommand(1);

  std::string instances, out_dir, ner = "heuristic";
  bool reason = false, sents = false;
  std::size_t max_path_docs = 3;
  auto* build = app.add_subcommand("build-graphs", "Build and serialize one relational graph per instance");
  build->add_option("instances", instances, "Instance file (one JSON record per line)")->required();
  build->add_option("--out", out_dir, "Output directory")->required();
  build->add_flag("--reason", reason, "Add reasoning entities and their relations");
  build->add_flag("--sents", sents, "Add sentence nodes and their relations");
  build->add_option("--max-path-docs", max_path_docs, "Longest document chain searched for reasoning paths")
      ->check(CLI::Range(std::size_t{2}, std::size_t{16}));
  build->add_option("--ner", ner, "Reasoning-entity source")->check(CLI::IsMember({"heuristic", "provided"}));

  std::string spec_path, out_file;
  auto* gen = app.add_subcommand("gen-synthetic", "Generate a synthetic multihop corpus");
  gen->add_option("--spec", spec_path, "Synthetic spec (JSON)")->required();
  gen->add_option("--out", out_file, "Output instance file")->required();

  std::string config_path;
  TrainOverrides ov;
  auto* tr = app.add_subcommand("train", "Train a model and keep the best-dev checkpoint");
  tr->add_option("--config", config_path, "Run config (JSON)")->required();
  tr->add_option("--epochs", ov.epochs, "Override the epoch budget");
  tr->add_option("--batch-size", ov.batch_size, "Override graphs per step");
  tr->add_option("--lr", ov.lr, "Override the learning rate");
  tr->add_option("--patience", ov.patience, "Override early-stop patience (0 disables)");
  tr->add_option("--seed", ov.seed, "Override the model seed");
  tr->add_option("--output-dir", ov.output_dir, "Override the output directory");
  tr->add_flag("--record-time", ov.record_time, "Record wall time per epoch (metrics are then not reproducible)");

  std::string checkpoint, data_path, predictions, errors, eval_config;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint written by train")->required();
  ev->add_option("--data", data_path, "Instance file")->required();
  ev->add_option("--predictions", predictions, "Write per-instance predictions (JSON lines)");
  ev->add_option("--errors", errors, "Write misclassified instances with their inputs (JSON lines)");
  ev->add_option("--config", eval_config, "Run config the checkpoint must match");

  std::string grid_spec;
  std::optional<std::size_t> threads;
  auto* gr = app.add_subcommand("grid", "Train every cell of an ablation grid");
  gr->add_option("--spec", grid_spec, "Grid spec (JSON)")->required();
  gr->add_option("--threads", threads, "Override the worker count");

  std::string graph_dir;
  auto* st = app.add_subcommand("stats", "Summarize a directory of serialized graphs");
  st->add_option("graph-dir", graph_dir, "Directory written by build-graphs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*build) return cmd_build_graphs(instances, out_dir, reason, sents, max_path_docs, ner);
    if (*gen) return cmd_gen_synthetic(spec_path, out_file);
    if (*tr) return cmd_train(config_path, ov);
    if (*ev) return cmd_eval(checkpoint, data_path, predictions, errors, eval_config);
    if (*gr) return cmd_grid(grid_spec, threads);
    if (*st) return cmd_stats(graph_dir);
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kValidation;
}
