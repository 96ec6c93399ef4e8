#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "attrsparse/attribution.hpp"

namespace attrsparse {

/// Per-example Gini of |IG| for one trained model over one split.
struct GiniReport {
  std::string regime;  // "n", "a(eps=0.1)", "l(lambda=0.02)", ...
  Vector per_example;
  double mean = 0.0;
  std::size_t degenerate = 0;
  std::uint64_t split_seed = 0;
  Vector baseline;
};

GiniReport gini_report(const std::vector<AttributionVector>& attribs, std::string regime,
                       std::uint64_t split_seed);

struct ComparisonRow {
  std::string model;
  double mean_gini = 0.0;
  double accuracy = 0.0;
  double dG = 0.0;      // mean_gini - natural mean_gini
  double acdrop = 0.0;  // natural accuracy - accuracy
  Vector per_example_dG;
};

/// Rows in input order; the natural row comes first with dG = 0.
struct SparsenessComparison {
  std::vector<ComparisonRow> rows;
  const ComparisonRow* find(const std::string& model) const;
};

struct ScoredReport {
  GiniReport report;
  double accuracy = 0.0;
};

/// Throws DataError when the reports were not computed on the same split
/// and baseline.
SparsenessComparison compare_regimes(const ScoredReport& natural,
                                     const std::vector<ScoredReport>& others);

/// dataset,attr,model,dG,AcDrop with AcDrop in percent.
std::string table1_csv(const SparsenessComparison& cmp, const std::string& dataset,
                       const std::string& attr = "IG");

/// model,example,dG rows backing per-example box plots.
std::string per_example_dg_csv(const SparsenessComparison& cmp);

std::string regime_label(const std::string& kind, double param);

}  // namespace attrsparse
