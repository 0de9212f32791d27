#pragma once

// Hand-rolled random generators for the property suites.

#include <random>
#include <string>
#include <vector>

namespace generators {

inline const std::vector<std::string>& relations() {
  static const std::vector<std::string> kRelations = {"WaterTemp", "WaterSalinity",
                                                      "CityLocations", "Stations"};
  return kRelations;
}

inline const std::vector<std::string>& attributes() {
  static const std::vector<std::string> kAttributes = {"lake", "temp", "salinity", "depth",
                                                       "city"};
  return kAttributes;
}

template <typename Rng>
std::size_t pick(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

template <typename Rng>
bool coin(Rng& rng, double p = 0.5) {
  return std::bernoulli_distribution(p)(rng);
}

template <typename Rng>
std::string random_constant(Rng& rng) {
  switch (pick(rng, 4)) {
    case 0: return std::to_string(pick(rng, 40));
    case 1: return std::to_string(pick(rng, 40)) + ".5";
    case 2: return "'Lake " + std::string(1, static_cast<char>('A' + pick(rng, 5))) + "'";
    default: return std::to_string(pick(rng, 5)) + "e1";
  }
}

template <typename Rng>
std::string random_predicate(Rng& rng, const std::vector<std::string>& rels) {
  static const std::vector<std::string> kOps = {"=", "<", "<=", ">", ">=", "<>"};
  const std::string col =
      (coin(rng) ? rels[pick(rng, rels.size())] + "." : std::string()) +
      attributes()[pick(rng, attributes().size())];
  switch (pick(rng, 7)) {
    case 0: return random_constant(rng) + " " + kOps[pick(rng, kOps.size())] + " " + col;
    case 1: return col + " IN (" + random_constant(rng) + ", " + random_constant(rng) + ")";
    case 2: return col + " BETWEEN " + random_constant(rng) + " AND " + random_constant(rng);
    case 3: return col + " LIKE 'L%'";
    case 4:
      return rels[pick(rng, rels.size())] + ".lake = " + rels[pick(rng, rels.size())] + ".lake";
    default: return col + " " + kOps[pick(rng, kOps.size())] + " " + random_constant(rng);
  }
}

template <typename Rng>
std::string random_condition(Rng& rng, const std::vector<std::string>& rels, int depth = 0) {
  const std::size_t n = 1 + pick(rng, 3);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += coin(rng, 0.7) ? " AND " : " OR ";
    if (depth < 1 && coin(rng, 0.2)) {
      out += "(" + random_condition(rng, rels, depth + 1) + ")";
    } else if (coin(rng, 0.1)) {
      out += "NOT " + random_predicate(rng, rels);
    } else {
      out += random_predicate(rng, rels);
    }
  }
  return out;
}

/// A random query of the supported subset over the lakes vocabulary.
template <typename Rng>
std::string random_query(Rng& rng) {
  std::vector<std::string> rels;
  const std::size_t nrel = 1 + pick(rng, 3);
  for (std::size_t i = 0; i < nrel; ++i) rels.push_back(relations()[pick(rng, relations().size())]);
  std::string q = "SELECT ";
  if (coin(rng, 0.2)) q += "DISTINCT ";
  if (coin(rng, 0.3)) {
    q += "*";
  } else {
    const std::size_t ncol = 1 + pick(rng, 3);
    for (std::size_t i = 0; i < ncol; ++i) {
      if (i) q += ", ";
      if (coin(rng, 0.15)) q += "count(*)";
      else q += attributes()[pick(rng, attributes().size())];
    }
  }
  q += " FROM ";
  for (std::size_t i = 0; i < rels.size(); ++i) {
    if (i) q += ", ";
    q += rels[i];
  }
  const bool has_where = coin(rng, 0.8);
  if (has_where) q += " WHERE " + random_condition(rng, rels);
  if (has_where && coin(rng, 0.1))
    q += " AND EXISTS (SELECT 1 FROM Stations WHERE Stations.lake = " + rels[0] + ".lake)";
  if (coin(rng, 0.2)) q += " GROUP BY " + attributes()[pick(rng, attributes().size())];
  if (coin(rng, 0.15)) q += " ORDER BY " + attributes()[pick(rng, attributes().size())] + " DESC";
  if (coin(rng, 0.1)) q += " LIMIT " + std::to_string(1 + pick(rng, 50));
  return q;
}

}  // namespace generators
