#include "rgcnqa/harness/train.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "rgcnqa/graphbuild/build.h"
#include "rgcnqa/harness/dataset.h"
#include "rgcnqa/numcore/adam.h"
#include "rgcnqa/numcore/checkpoint.h"

namespace rgcnqa {
namespace {

constexpr const char* kMetadataFormat = "rgcnqa-run";

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

}  // namespace

nlohmann::json source_config_to_json(const SourceConfig& s) {
  nlohmann::json j{{"name", s.name}, {"kind", source_kind_name(s.kind)}};
  if (s.kind == SourceKind::hash_fallback) {
    j["dim"] = s.dim;
  } else {
    j["path"] = s.path.generic_string();
  }
  if (s.kind == SourceKind::contextual_file) j["strict"] = s.strict;
  return j;
}

SourceConfig source_config_from_json(const nlohmann::json& j) {
  SourceConfig s;
  try {
    s.name = j.at("name").get<std::string>();
    s.kind = source_kind_from_name(j.at("kind").get<std::string>());
    s.path = j.value("path", std::string());
    s.dim = j.value("dim", std::size_t{0});
    s.strict = j.value("strict", true);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("embedding source: ") + e.what());
  } catch (const EmbeddingError& e) {
    throw ValidationError(e.what());
  }
  if (s.name.empty()) throw ValidationError("embedding source without a name");
  if (s.kind == SourceKind::hash_fallback && s.dim == 0) {
    throw ValidationError("embedding source " + s.name + ": hash_fallback needs a positive dim");
  }
  if (s.kind != SourceKind::hash_fallback && s.path.empty()) {
    throw ValidationError("embedding source " + s.name + ": a path is required");
  }
  return s;
}

std::shared_ptr<const EmbeddingSource> load_source(const SourceConfig& s) {
  switch (s.kind) {
    case SourceKind::static_table:
      return std::make_shared<const EmbeddingSource>(EmbeddingSource::load_static_table(s.path, s.name));
    case SourceKind::contextual_file:
      return std::make_shared<const EmbeddingSource>(EmbeddingSource::load_contextual(s.path, s.name, s.strict));
    case SourceKind::hash_fallback:
      return std::make_shared<const EmbeddingSource>(EmbeddingSource::hash_fallback(s.name, s.dim));
  }
  throw std::logic_error("unreachable source kind");
}

EmbedSpec load_embed_spec(const std::vector<SourceConfig>& available, const std::vector<std::string>& names) {
  if (names.empty()) throw ValidationError("embedding spec names no sources");
  std::vector<std::shared_ptr<const EmbeddingSource>> sources;
  for (const auto& name : names) {
    auto it = std::find_if(available.begin(), available.end(), [&](const SourceConfig& s) { return s.name == name; });
    if (it == available.end()) throw ValidationError("embedding spec names unknown source \"" + name + "\"");
    sources.push_back(load_source(*it));
  }
  return EmbedSpec(std::move(sources));
}

void resolve_input_dim(ModelConfig& model, const EmbedSpec& spec) {
  if (model.embed_spec.empty()) model.embed_spec = spec.names();
  if (model.embed_spec != spec.names()) throw ValidationError("model embed_spec does not match the loaded sources");
  if (model.input_dim == 0) model.input_dim = spec.total_dim();
  if (model.input_dim != spec.total_dim()) {
    throw ValidationError("model input_dim " + std::to_string(model.input_dim) + " differs from the embedding width " +
                          std::to_string(spec.total_dim()));
  }
}

void RunConfig::validate() const {
  if (epochs < 1) throw ValidationError("run config: epochs must be at least 1");
  if (batch_size < 1) throw ValidationError("run config: batch_size must be at least 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("run config: lr must be positive");
  if (embeddings.empty()) throw ValidationError("run config: no embedding sources");
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
      if (embeddings[i].name == embeddings[j].name) {
        throw ValidationError("run config: duplicate embedding source \"" + embeddings[i].name + "\"");
      }
    }
  }
}

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  static const std::vector<std::string> known{"model", "embeddings", "train", "dev",     "output_dir",
                                              "epochs", "batch_size", "lr",   "patience", "record_time"};
  RunConfig c;
  if (!j.is_object()) throw ValidationError("run config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ValidationError("run config: unknown field \"" + it.key() + "\"");
    }
  }
  try {
    c.model = model_config_from_json(j.value("model", nlohmann::json::object()));
    for (const auto& s : j.value("embeddings", nlohmann::json::array())) {
      SourceConfig src = source_config_from_json(s);
      if (!src.path.empty()) src.path = resolve(base_dir, src.path.string());
      c.embeddings.push_back(std::move(src));
    }
    c.train_path = resolve(base_dir, j.value("train", std::string()));
    c.dev_path = resolve(base_dir, j.value("dev", std::string()));
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string()));
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.patience = j.value("patience", c.patience);
    c.record_time = j.value("record_time", c.record_time);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("run config: ") + e.what());
  } catch (const ValidationError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  if (c.model.embed_spec.empty()) {
    for (const auto& s : c.embeddings) c.model.embed_spec.push_back(s.name);
  }
  c.validate();
  return c;
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& s : c.embeddings) sources.push_back(source_config_to_json(s));
  return {{"model", model_config_to_json(c.model)},
          {"embeddings", std::move(sources)},
          {"train", c.train_path.generic_string()},
          {"dev", c.dev_path.generic_string()},
          {"output_dir", c.output_dir.generic_string()},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"patience", c.patience},
          {"record_time", c.record_time}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": not valid JSON: " + e.what());
  } catch (const std::runtime_error& e) {
    throw ValidationError(e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

std::vector<Example> prepare_examples(const std::vector<Instance>& instances, const GraphConfig& graph,
                                      const EmbedSpec& spec) {
  std::vector<Example> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    const RelGraph g = build_graph(inst, graph);
    out.push_back({inst.id, inst.answer_index(),
                   make_input(g, featurize_nodes(inst, g, spec), featurize_query(inst, spec), graph)});
  }
  return out;
}

nlohmann::ordered_json epoch_record_to_json(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["train_acc"] = r.train_acc;
  j["dev_acc"] = r.dev_acc;
  j["seconds"] = r.seconds ? nlohmann::ordered_json(*r.seconds) : nlohmann::ordered_json(nullptr);
  return j;
}

double mean_loss(const Model& model, const std::vector<Example>& examples) {
  if (examples.empty()) throw ValidationError("mean_loss: no examples");
  double total = 0.0;
  for (const auto& ex : examples) {
    Tape tape(0, false);
    total += model.loss(tape, model.forward(tape, ex.input), ex.target).value()(0, 0);
  }
  return total / static_cast<double>(examples.size());
}

EvalResult evaluate(const Model& model, const std::vector<Example>& examples) {
  EvalResult r;
  for (const auto& ex : examples) {
    Tape tape(0, false);
    const NodeScores s = model.forward(tape, ex.input);
    Prediction p{ex.id, ex.target, s.predicted(), s.probabilities.values()};
    if (p.correct()) ++r.correct;
    r.predictions.push_back(std::move(p));
  }
  r.accuracy = examples.empty() ? 0.0 : static_cast<double>(r.correct) / static_cast<double>(examples.size());
  return r;
}

std::string checkpoint_metadata(const RunConfig& config, const ModelConfig& model, std::size_t best_epoch,
                                double best_dev_acc) {
  RunConfig stored = config;
  stored.model = model;
  return nlohmann::json{{"format", kMetadataFormat},
                        {"run", run_config_to_json(stored)},
                        {"best_epoch", best_epoch},
                        {"best_dev_acc", best_dev_acc}}
      .dump();
}

TrainMetrics train(Model& model, const RunConfig& config, const std::vector<Example>& train_set,
                   const std::vector<Example>& dev_set) {
  config.validate();
  if (train_set.empty()) throw ValidationError("train: training set is empty");
  if (dev_set.empty()) throw ValidationError("train: dev set is empty");
  const bool write = !config.output_dir.empty();
  std::ofstream metrics_out;
  if (write) {
    std::filesystem::create_directories(config.output_dir);
    metrics_out.open(config.output_dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
    if (!metrics_out) throw std::runtime_error("cannot write metrics in " + config.output_dir.string());
  }

  const std::uint64_t seed = model.config().seed;
  Rng order_rng(mix64(seed ^ 0x6f72646572ULL));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto params = model.params().pointers();
  const AdamOptions adam{config.lr};

  TrainMetrics metrics;
  std::size_t since_best = 0;
  std::uint64_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    order_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t e = std::min(order.size(), b + config.batch_size);
      const double scale = 1.0 / static_cast<double>(e - b);
      Gradients batch;
      for (std::size_t i = b; i < e; ++i) {
        const Example& ex = train_set[order[i]];
        try {
          Tape tape(mix64(seed ^ mix64(++step)));
          const NodeScores s = model.forward(tape, ex.input, true);
          const Var loss = model.loss(tape, s, ex.target);
          loss_sum += loss.value()(0, 0);
          if (s.predicted() == ex.target) ++correct;
          batch.accumulate(tape.backward(loss), scale);
        } catch (const NumericError& err) {
          throw NumericError("epoch " + std::to_string(epoch) + ", instance " + ex.id + ": " + err.what());
        }
      }
      try {
        adam_step(params, batch, adam);
      } catch (const NumericError& err) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch starting at position " + std::to_string(b) +
                           ": " + err.what());
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_set.size());
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
    rec.dev_acc = evaluate(model, dev_set).accuracy;
    if (config.record_time) {
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    metrics.epochs.push_back(rec);
    if (write) {
      metrics_out << epoch_record_to_json(rec).dump() << '\n';
      metrics_out.flush();
    }

    if (metrics.best_epoch == 0 || rec.dev_acc > metrics.best_dev_acc) {
      metrics.best_dev_acc = rec.dev_acc;
      metrics.best_epoch = epoch;
      since_best = 0;
      if (write) {
        write_checkpoint(config.output_dir / "checkpoint.bin", model.params(),
                         checkpoint_metadata(config, model.config(), epoch, rec.dev_acc));
      }
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      metrics.stopped_early = epoch < config.epochs;
      break;
    }
  }

  if (write) {
    const nlohmann::json summary{{"best_dev_acc", metrics.best_dev_acc},
                                 {"best_epoch", metrics.best_epoch},
                                 {"epochs_run", metrics.epochs.size()},
                                 {"stopped_early", metrics.stopped_early}};
    write_text_file(config.output_dir / "summary.json", summary.dump(2) + "\n");
  }
  return metrics;
}

TrainMetrics run_training(const RunConfig& config) {
  config.validate();
  if (config.train_path.empty() || config.dev_path.empty()) throw ValidationError("run config needs train and dev paths");
  RunConfig resolved = config;
  const EmbedSpec spec = load_embed_spec(config.embeddings, config.model.embed_spec);
  resolve_input_dim(resolved.model, spec);
  resolved.model.validate();
  const auto train_set = prepare_examples(load_dataset(config.train_path), resolved.model.graph, spec);
  const auto dev_set = prepare_examples(load_dataset(config.dev_path), resolved.model.graph, spec);
  Model model(resolved.model);
  return train(model, resolved, train_set, dev_set);
}

LoadedModel load_model(const std::filesystem::path& checkpoint, const std::optional<ModelConfig>& expected) {
  const Checkpoint ck = read_checkpoint(checkpoint);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ck.metadata);
  } catch (const nlohmann::json::parse_error&) {
    throw CheckpointError(checkpoint.string() + ": metadata is not a run record");
  }
  if (!meta.is_object() || meta.value("format", std::string()) != kMetadataFormat) {
    throw CheckpointError(checkpoint.string() + ": metadata is not a run record");
  }
  LoadedModel out;
  out.config = run_config_from_json(meta.at("run"));
  if (expected && !(*expected == out.config.model)) {
    throw CheckpointError(checkpoint.string() + ": stored model config " + model_config_to_json(out.config.model).dump() +
                          " differs from the expected " + model_config_to_json(*expected).dump());
  }
  out.model = std::make_unique<Model>(out.config.model);
  load_params(out.model->params(), ck);
  return out;
}

EvalResult evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::vector<Instance>& instances,
                               const std::optional<ModelConfig>& expected) {
  const LoadedModel lm = load_model(checkpoint, expected);
  const EmbedSpec spec = load_embed_spec(lm.config.embeddings, lm.config.model.embed_spec);
  if (spec.total_dim() != lm.config.model.input_dim) {
    throw CheckpointError("embedding width " + std::to_string(spec.total_dim()) + " differs from the checkpoint's " +
                          std::to_string(lm.config.model.input_dim));
  }
  return evaluate(*lm.model, prepare_examples(instances, lm.config.model.graph, spec));
}

std::string predictions_to_jsonl(const EvalResult& result, const std::vector<Instance>& instances) {
  if (result.predictions.size() != instances.size()) throw std::invalid_argument("predictions do not match instances");
  std::string out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& p = result.predictions[i];
    const auto& in = instances[i];
    out += nlohmann::json{{"id", p.id},
                          {"candidates", in.candidates},
                          {"gold", in.candidates.at(p.gold)},
                          {"predicted", in.candidates.at(p.predicted)},
                          {"probabilities", p.probabilities},
                          {"correct", p.correct()}}
               .dump() +
           "\n";
  }
  return out;
}

std::string errors_to_jsonl(const EvalResult& result, const std::vector<Instance>& instances) {
  if (result.predictions.size() != instances.size()) throw std::invalid_argument("predictions do not match instances");
  std::string out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& p = result.predictions[i];
    if (p.correct()) continue;
    nlohmann::json rec = instance_to_json(instances[i]);
    rec["predicted"] = instances[i].candidates.at(p.predicted);
    rec["probabilities"] = p.probabilities;
    out += rec.dump() + "\n";
  }
  return out;
}

}  // namespace rgcnqa
