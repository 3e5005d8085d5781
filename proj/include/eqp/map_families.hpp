#pragma once

// Named map families and the string grammar used by configs:
//
//   expr := name '(' [arg {',' arg}] ')'
//   arg  := number | expr
//
// e.g. "kraus_scaled(0.7, amplitude_damping(0.4))".

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "eqp/positive_map.hpp"

namespace eqp::maps {

/// X -> (1 - p) X + p tr(X) I / D, in Kraus form over the Weyl basis.
PositiveMap depolarizing(double p, int dim = 2);
/// Qubit amplitude damping with decay probability gamma.
PositiveMap amplitude_damping(double gamma);
/// X -> (1 - p) X + p sx X sx.
PositiveMap bit_flip(double p);
/// X -> K X K* with K = diag(entries).
PositiveMap diag_conj(const std::vector<double>& entries);
/// c * base.
PositiveMap kraus_scaled(double c, const PositiveMap& base);
/// `rank` unnormalized Ginibre Kraus operators.
PositiveMap random_cp(int rank, std::uint64_t seed, int dim = 2);
/// Ginibre Kraus family normalized to be trace preserving.
PositiveMap random_channel(int rank, std::uint64_t seed, int dim = 2);

/// Parses the grammar above. Throws UsageError naming the offending position.
PositiveMap parse(std::string_view spec);

/// Shortest round-trip decimal form used in labels.
std::string format_number(double x);

}  // namespace eqp::maps
