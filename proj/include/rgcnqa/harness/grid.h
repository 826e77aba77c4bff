#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rgcnqa/harness/train.h"

namespace rgcnqa {

/// Cartesian product of model variants sharing one base run. Every axis must
/// be non-empty; an axis omitted from the JSON keeps the base run's value.
struct GridSpec {
  RunConfig base;
  std::vector<Arch> archs;
  std::vector<bool> use_rgcn;
  std::vector<std::string> graphs;  // setting names
  std::vector<std::vector<std::string>> embed_specs;
  std::vector<int> scales;
  std::filesystem::path output_dir;
  std::size_t threads = 1;
};

/// {"run": {...}, "axes": {"arch", "use_rgcn", "graph", "embed_spec", "scale"},
///  "output_dir", "threads"}; relative paths resolve against `base_dir`.
GridSpec grid_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
GridSpec load_grid_spec(const std::filesystem::path& path);

struct GridCell {
  Arch arch = Arch::entity;
  bool use_rgcn = true;
  std::string graph;
  std::vector<std::string> embed_spec;
  int scale = 1;
  /// Directory-safe identifier, unique within a grid.
  std::string name() const;
  /// Column label in the report table, such as "EntityGCN", "PathNoGCN" or "MashupGCN+".
  std::string model_label() const;
  /// Row label: graph setting, plus the embedding combination when it varies.
  std::string row_label(bool with_embeddings) const;
};

/// Cells in axis order embed_spec, graph, arch, use_rgcn, scale (last varies fastest).
std::vector<GridCell> grid_cells(const GridSpec& spec);

struct GridRow {
  GridCell cell;
  std::optional<double> best_dev_acc;  // empty when the cell failed
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  std::string error;
  bool numeric_failure = false;  // the error was a non-finite loss or gradient
};

/// Trains every cell on a pool of `spec.threads` workers. Each cell owns its
/// model, tapes and output directory; a failing cell is recorded and the rest
/// continue. Writes metrics.jsonl (every cell's records tagged with its name,
/// in cell order), report.jsonl (one row per cell) and report.md (pivot
/// table) under spec.output_dir. The result is in cell order.
std::vector<GridRow> run_grid(const GridSpec& spec);

/// Pivot table: rows are graph settings (and embedding combinations when
/// several are present), columns are model labels; cells show accuracy in
/// percent with two decimals, "failed", or "--" when absent.
std::string render_grid_table(const std::vector<GridRow>& rows);

}  // namespace rgcnqa
