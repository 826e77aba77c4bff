#include "rgcnqa/harness/grid.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <map>
#include <thread>

#include "rgcnqa/graphbuild/build.h"
#include "rgcnqa/harness/dataset.h"

namespace rgcnqa {
namespace {

template <typename T>
std::vector<T> axis(const nlohmann::json& axes, const char* key, T fallback) {
  if (!axes.contains(key)) return {fallback};
  auto v = axes.at(key).get<std::vector<T>>();
  if (v.empty()) throw ValidationError(std::string("grid axis \"") + key + "\" is empty");
  return v;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string arch_label(Arch a, bool rgcn) {
  switch (a) {
    case Arch::entity:
      return rgcn ? "EntityGCN" : "EntNoGCN";
    case Arch::path:
      return rgcn ? "PathGCN" : "PathNoGCN";
    case Arch::mashup:
      return rgcn ? "MashupGCN" : "MashupNoGCN";
  }
  return "?";
}

std::string setting_label(const std::string& setting) {
  if (setting == "base") return "Base";
  if (setting == "reason") return "+Reason";
  if (setting == "sents") return "+Sents";
  if (setting == "reason+sents") return "+Reason+Sents";
  return setting;
}

GridRow run_cell(const GridSpec& spec, const GridCell& cell) {
  GridRow row{cell, std::nullopt, 0, 0, {}, false};
  try {
    RunConfig rc = spec.base;
    rc.model.arch = cell.arch;
    rc.model.use_rgcn = cell.use_rgcn;
    const GraphConfig setting = config_for_setting(cell.graph);
    rc.model.graph.use_reasoning = setting.use_reasoning;
    rc.model.graph.use_sentences = setting.use_sentences;
    rc.model.embed_spec = cell.embed_spec;
    rc.model.input_dim = 0;
    rc.model.scale = cell.scale;
    rc.output_dir = spec.output_dir / cell.name();
    const TrainMetrics m = run_training(rc);
    row.best_dev_acc = m.best_dev_acc;
    row.best_epoch = m.best_epoch;
    row.epochs_run = m.epochs.size();
  } catch (const NumericError& e) {
    row.error = e.what();
    row.numeric_failure = true;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

}  // namespace

std::string GridCell::name() const {
  std::string emb = join(embed_spec, "+");
  std::replace_if(emb.begin(), emb.end(), [](char c) { return !std::isalnum(static_cast<unsigned char>(c)) && c != '+'; }, '_');
  std::string g = graph;
  std::replace(g.begin(), g.end(), '+', '-');
  return std::string(arch_name(arch)) + (use_rgcn ? "-gcn" : "-nogcn") + "-" + g + "-" + emb + "-x" +
         std::to_string(scale);
}

std::string GridCell::model_label() const { return arch_label(arch, use_rgcn) + (scale == 2 ? "+" : ""); }

std::string GridCell::row_label(bool with_embeddings) const {
  const std::string s = setting_label(graph);
  return with_embeddings ? s + " / " + join(embed_spec, "+") : s;
}

GridSpec grid_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("grid spec must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "run" && it.key() != "axes" && it.key() != "output_dir" && it.key() != "threads") {
      throw ValidationError("grid spec: unknown field \"" + it.key() + "\"");
    }
  }
  GridSpec g;
  if (!j.contains("run")) throw ValidationError("grid spec lacks \"run\"");
  g.base = run_config_from_json(j.at("run"), base_dir);
  try {
    const nlohmann::json axes = j.value("axes", nlohmann::json::object());
    for (auto it = axes.begin(); it != axes.end(); ++it) {
      static const std::vector<std::string> known{"arch", "use_rgcn", "graph", "embed_spec", "scale"};
      if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
        throw ValidationError("grid spec: unknown axis \"" + it.key() + "\"");
      }
    }
    for (const auto& a : axis<std::string>(axes, "arch", std::string(arch_name(g.base.model.arch)))) {
      g.archs.push_back(arch_from_name(a));
    }
    g.use_rgcn = axis<bool>(axes, "use_rgcn", g.base.model.use_rgcn);
    g.graphs = axis<std::string>(axes, "graph", setting_name(g.base.model.graph));
    for (const auto& s : g.graphs) config_for_setting(s);
    g.embed_specs = axis<std::vector<std::string>>(axes, "embed_spec", g.base.model.embed_spec);
    g.scales = axis<int>(axes, "scale", g.base.model.scale);
    const std::string out = j.value("output_dir", std::string());
    if (out.empty()) throw ValidationError("grid spec needs an output_dir");
    g.output_dir = out;
    if (g.output_dir.is_relative() && !base_dir.empty()) g.output_dir = base_dir / g.output_dir;
    g.threads = j.value("threads", std::size_t{1});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("grid spec: ") + e.what());
  } catch (const ValidationError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("grid spec: ") + e.what());
  }
  if (g.threads == 0) throw ValidationError("grid spec: threads must be positive");
  for (const auto& e : g.embed_specs) {
    if (e.empty()) throw ValidationError("grid spec: an embed_spec entry names no sources");
  }
  return g;
}

GridSpec load_grid_spec(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": not valid JSON: " + e.what());
  } catch (const std::runtime_error& e) {
    throw ValidationError(e.what());
  }
  return grid_spec_from_json(j, path.parent_path());
}

std::vector<GridCell> grid_cells(const GridSpec& spec) {
  std::vector<GridCell> cells;
  for (const auto& e : spec.embed_specs)
    for (const auto& g : spec.graphs)
      for (Arch a : spec.archs)
        for (bool r : spec.use_rgcn)
          for (int s : spec.scales) cells.push_back({a, r, g, e, s});
  return cells;
}

std::vector<GridRow> run_grid(const GridSpec& spec) {
  const auto cells = grid_cells(spec);
  std::vector<GridRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) rows[i] = run_cell(spec, cells[i]);
  };
  const std::size_t n_threads = std::min(spec.threads, cells.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::string merged, report;
  for (const auto& row : rows) {
    const std::filesystem::path metrics = spec.output_dir / row.cell.name() / "metrics.jsonl";
    if (std::filesystem::exists(metrics)) {
      const std::string text = read_text_file(metrics);
      std::size_t pos = 0;
      while (pos < text.size()) {
        const std::size_t end = text.find('\n', pos);
        const std::string line = text.substr(pos, end - pos);
        pos = end == std::string::npos ? text.size() : end + 1;
        if (line.empty()) continue;
        nlohmann::ordered_json rec = nlohmann::ordered_json::parse(line);
        rec["cell"] = row.cell.name();
        merged += rec.dump() + "\n";
      }
    }
    nlohmann::json r{{"cell", row.cell.name()},
                     {"arch", arch_name(row.cell.arch)},
                     {"use_rgcn", row.cell.use_rgcn},
                     {"graph", row.cell.graph},
                     {"embed_spec", row.cell.embed_spec},
                     {"scale", row.cell.scale},
                     {"model", row.cell.model_label()}};
    r["best_dev_acc"] = row.best_dev_acc ? nlohmann::json(*row.best_dev_acc) : nlohmann::json(nullptr);
    r["best_epoch"] = row.best_epoch;
    r["epochs_run"] = row.epochs_run;
    r["error"] = row.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(row.error);
    report += r.dump() + "\n";
  }
  write_text_file(spec.output_dir / "metrics.jsonl", merged);
  write_text_file(spec.output_dir / "report.jsonl", report);
  write_text_file(spec.output_dir / "report.md", render_grid_table(rows));
  return rows;
}

std::string render_grid_table(const std::vector<GridRow>& rows) {
  std::vector<std::vector<std::string>> embeds;
  for (const auto& r : rows) {
    if (std::find(embeds.begin(), embeds.end(), r.cell.embed_spec) == embeds.end()) embeds.push_back(r.cell.embed_spec);
  }
  const bool with_embeddings = embeds.size() > 1;

  // Columns follow model order: arch, then GCN before NoGCN, then scale.
  std::vector<GridCell> col_keys;
  for (const auto& r : rows) col_keys.push_back(r.cell);
  std::stable_sort(col_keys.begin(), col_keys.end(), [](const GridCell& a, const GridCell& b) {
    return std::tuple(a.scale, a.arch, !a.use_rgcn) < std::tuple(b.scale, b.arch, !b.use_rgcn);
  });
  std::vector<std::string> cols, row_labels;
  for (const auto& c : col_keys) {
    if (std::find(cols.begin(), cols.end(), c.model_label()) == cols.end()) cols.push_back(c.model_label());
  }
  std::map<std::pair<std::string, std::string>, std::string> cell_text;
  for (const auto& r : rows) {
    const std::string rl = r.cell.row_label(with_embeddings);
    if (std::find(row_labels.begin(), row_labels.end(), rl) == row_labels.end()) row_labels.push_back(rl);
    std::string text = "failed";
    if (r.best_dev_acc) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", 100.0 * *r.best_dev_acc);
      text = buf;
    }
    cell_text[{rl, r.cell.model_label()}] = text;
  }

  std::string out = "|";
  for (const auto& c : cols) out += " | " + c;
  out += " |\n|---";
  for (std::size_t i = 0; i < cols.size(); ++i) out += "|---";
  out += "|\n";
  for (const auto& rl : row_labels) {
    out += "| " + rl;
    for (const auto& c : cols) {
      auto it = cell_text.find({rl, c});
      out += " | " + (it == cell_text.end() ? std::string("--") : it->second);
    }
    out += " |\n";
  }
  return out;
}

}  // namespace rgcnqa
