#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rgcnqa/embed/embedding.h"
#include "rgcnqa/graphbuild/instance.h"
#include "rgcnqa/models/model.h"

namespace rgcnqa {

/// Where one embedding source comes from. `path` is unused for hash_fallback;
/// `dim` is used only by hash_fallback.
struct SourceConfig {
  std::string name;
  SourceKind kind = SourceKind::hash_fallback;
  std::filesystem::path path;
  std::size_t dim = 0;
  bool strict = true;
  bool operator==(const SourceConfig&) const = default;
};

nlohmann::json source_config_to_json(const SourceConfig& s);
SourceConfig source_config_from_json(const nlohmann::json& j);
std::shared_ptr<const EmbeddingSource> load_source(const SourceConfig& s);

/// Loads the sources named by `names` from `available`, in the order given.
EmbedSpec load_embed_spec(const std::vector<SourceConfig>& available, const std::vector<std::string>& names);

struct RunConfig {
  ModelConfig model;
  std::vector<SourceConfig> embeddings;
  std::filesystem::path train_path;
  std::filesystem::path dev_path;
  std::filesystem::path output_dir;
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  double lr = 1e-4;
  std::size_t patience = 5;  // epochs without a dev improvement before stopping; 0 disables
  bool record_time = false;  // wall time in the metrics breaks byte-identical reruns

  /// Throws ValidationError on a broken invariant.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Relative paths in `j` resolve against `base_dir`. A missing model
/// embed_spec defaults to every listed source; a missing input_dim is
/// derived from the source widths.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);
/// Fills embed_spec and input_dim from the loaded sources when they are unset
/// and checks them against the sources otherwise.
void resolve_input_dim(ModelConfig& model, const EmbedSpec& spec);

/// One instance turned into model input.
struct Example {
  std::string id;
  std::size_t target = 0;
  ModelInput input;
};

std::vector<Example> prepare_examples(const std::vector<Instance>& instances, const GraphConfig& graph,
                                      const EmbedSpec& spec);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double dev_acc = 0.0;
  std::optional<double> seconds;
};

/// Keys in the order epoch, train_loss, train_acc, dev_acc, seconds.
nlohmann::ordered_json epoch_record_to_json(const EpochRecord& r);

struct TrainMetrics {
  std::vector<EpochRecord> epochs;
  double best_dev_acc = 0.0;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

/// Mean loss over the examples, without updating anything.
double mean_loss(const Model& model, const std::vector<Example>& examples);

/// Minimizes the batch-mean negative log-likelihood with Adam. Writes
/// metrics.jsonl (one line per epoch, flushed as it goes), the best-dev
/// checkpoint.bin and summary.json into config.output_dir when it is
/// non-empty. The model is left at its final (not best) state. Throws
/// NumericError naming the epoch and instance when a loss or gradient turns
/// non-finite.
TrainMetrics train(Model& model, const RunConfig& config, const std::vector<Example>& train_set,
                   const std::vector<Example>& dev_set);

/// Loads datasets and embeddings named by `config`, then trains a fresh model.
TrainMetrics run_training(const RunConfig& config);

struct Prediction {
  std::string id;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::vector<double> probabilities;
  bool correct() const { return gold == predicted; }
};

struct EvalResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::vector<Prediction> predictions;
};

EvalResult evaluate(const Model& model, const std::vector<Example>& examples);

/// Checkpoint metadata: the run configuration, with the model config of the
/// trained model, plus the best epoch so far.
std::string checkpoint_metadata(const RunConfig& config, const ModelConfig& model, std::size_t best_epoch,
                                double best_dev_acc);

/// Rebuilds a model from a checkpoint written by train(). When `expected` is
/// given it must equal the stored model config.
struct LoadedModel {
  std::unique_ptr<Model> model;
  RunConfig config;
};
LoadedModel load_model(const std::filesystem::path& checkpoint, const std::optional<ModelConfig>& expected = std::nullopt);

/// Accuracy of a stored checkpoint on instances, with embeddings taken from
/// the checkpoint's run configuration.
EvalResult evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::vector<Instance>& instances,
                               const std::optional<ModelConfig>& expected = std::nullopt);

/// One JSON line per instance: id, candidates, gold and predicted answers,
/// probabilities and correctness.
std::string predictions_to_jsonl(const EvalResult& result, const std::vector<Instance>& instances);
/// Full inputs of every misclassified instance alongside the model's
/// probabilities, for manual error analysis.
std::string errors_to_jsonl(const EvalResult& result, const std::vector<Instance>& instances);

}  // namespace rgcnqa
