#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mscme/model.hpp"

namespace mscme {

/// Result of reading a network description file.
struct NetworkDescription {
  ReactionNetwork network;
  std::optional<VariableBasis> basis;  // present iff slow/fast lines exist
  std::vector<LinearBound> domains;    // in file order

  /// Bounds whose name is a species.
  std::vector<LinearBound> species_domains() const;
  /// Bound for a named variable or species, if declared.
  std::optional<LinearBound> domain_of(const std::string& name) const;
};

/// Line-oriented grammar, '#' starts a comment:
///
///   species X1 X2 ...
///   volume <positive real>
///   reaction <name>: <terms> -> <terms> @ <rate> [halved]
///   slow <name> = <integer linear combination>
///   fast <name> = <integer linear combination>
///   domain <variable or species> in <lo>..<hi>
///
/// Terms are `0` or `+`-joined `<int>*<species>` (coefficient 1 optional).
/// `halved` puts the factor 1/2 on a homodimer propensity.
/// Throws ParseError (with line number) or ConfigError.
NetworkDescription parse_network(std::string_view text);
NetworkDescription load_network(const std::string& path);

/// Parses `2*X1 + X2 - X3` against a species list.
IntVector parse_linear_combination(std::string_view text,
                                   const std::vector<std::string>& species, int line = 0);

std::string read_text_file(const std::string& path);

}  // namespace mscme
