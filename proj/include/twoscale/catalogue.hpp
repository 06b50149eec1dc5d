#pragma once

#include <string>
#include <vector>

#include "twoscale/coefficient.hpp"
#include "twoscale/separable.hpp"

namespace twoscale {

/// Weighted integral of one gradient component, or of the flux A (grad u0 +
/// grad_y u1) when kind == flux.
struct ObservationFunctional {
  enum class Kind { gradient, flux };

  std::string id;
  Kind kind = Kind::gradient;
  int component = 0;  // p
  SeparableTerm weight;

  bool depends_on_y() const;
};

struct TermEntry {
  std::string id;
  int dim = 1;
  SeparableTerm psi;
};

struct FunctionalEntry {
  std::string id;
  int dim = 1;
  ObservationFunctional functional;
};

struct GroupEntry {
  std::string id;  // starts with '@'
  int dim = 1;
  std::vector<std::string> members;
};

/// Entries in a fixed, documented order.
const std::vector<TermEntry>& coefficient_term_catalogue();
const std::vector<FunctionalEntry>& functional_catalogue();
const std::vector<GroupEntry>& group_catalogue();

/// Resolves ids and '@group' names. A term id may carry a scale suffix
/// "id:factor". Throws ConfigError for unknown ids or wrong dimension.
std::vector<ExpansionTerm> resolve_terms(const std::vector<std::string>& ids, int dim);
std::vector<ObservationFunctional> resolve_functionals(const std::vector<std::string>& ids, int dim);

/// Human-readable listing of every entry with its formula.
std::string list_catalogue();

}  // namespace twoscale
