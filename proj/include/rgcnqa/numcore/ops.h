#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rgcnqa/numcore/tape.h"

// Differentiable ops over rank-2 Vars. Every op validates shapes, checks its
// output for NaN/Inf, and records a backward rule when gradients are needed.
namespace rgcnqa::ops {

enum class Elementwise { sigmoid, tanh, mul, add, sub };

/// Row-major m x n mask; nonzero entries participate.
using Mask = std::vector<std::uint8_t>;

/// Incoming neighbor lists, one per destination row.
using NeighborLists = std::vector<std::vector<std::size_t>>;

Var matmul(Var a, Var b);

/// Binary kinds accept equal shapes, or b as a 1 x n row broadcast over a's rows.
Var elementwise(Elementwise kind, Var a, std::optional<Var> b = std::nullopt);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var sigmoid(Var a);
Var tanh(Var a);
Var scale(Var a, double factor);

/// Inverted dropout driven by the tape RNG; rate 0 returns `a` unchanged.
Var dropout(Var a, double rate);
Var softmax_rows(Var a, const Mask* mask = nullptr);

Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t offset, std::size_t length);
std::vector<Var> split(Var a, std::size_t axis, std::span<const std::size_t> sizes);

Var transpose(Var a);
/// 1 x n row repeated to count x n.
Var repeat_rows(Var row, std::size_t count);
/// Sum of all entries as 1 x 1.
Var sum(Var a);

/// out[i] = mean of h[j] over j in lists[i]; zero row for an empty list.
/// Repeated entries count with multiplicity.
Var mean_aggregate(Var h, const NeighborLists& lists);

/// n x m -> n x 1 row maxima. Gradient flows to the first maximal entry.
Var row_max(Var a);

/// n x 1 scores -> 1 x k, entry g = max over rows in groups[g].
Var group_max(Var scores, const std::vector<std::vector<std::size_t>>& groups);

/// -log softmax(logits)[target] for a 1 x k logit row, computed stably.
Var softmax_cross_entropy(Var logits, std::size_t target);

}  // namespace rgcnqa::ops
