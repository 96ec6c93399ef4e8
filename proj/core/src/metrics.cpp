#include "attrsparse/metrics.hpp"

#include "attrsparse/gini.hpp"
#include "attrsparse/io.hpp"

namespace attrsparse {

std::string regime_label(const std::string& kind, double param) {
  if (kind == "n" || kind == "natural") return "n";
  if (kind == "a" || kind == "adversarial") return "a(eps=" + format_double(param) + ")";
  if (kind == "l" || kind == "l1") return "l(lambda=" + format_double(param) + ")";
  if (kind == "stable-ig") return "s(eps=" + format_double(param) + ")";
  return kind + "(" + format_double(param) + ")";
}

GiniReport gini_report(const std::vector<AttributionVector>& attribs, std::string regime,
                       std::uint64_t split_seed) {
  if (attribs.empty()) throw Error("gini report: no attributions");
  GiniReport r;
  r.regime = std::move(regime);
  r.split_seed = split_seed;
  r.baseline = attribs.front().baseline;
  r.per_example.reserve(attribs.size());
  double sum = 0.0;
  for (const auto& a : attribs) {
    const GiniValue g = gini_of_attribution(a);
    r.degenerate += g.degenerate;
    r.per_example.push_back(g.value);
    sum += g.value;
  }
  r.mean = sum / static_cast<double>(attribs.size());
  return r;
}

const ComparisonRow* SparsenessComparison::find(const std::string& model) const {
  for (const auto& r : rows)
    if (r.model == model) return &r;
  return nullptr;
}

SparsenessComparison compare_regimes(const ScoredReport& natural,
                                     const std::vector<ScoredReport>& others) {
  const GiniReport& n = natural.report;
  SparsenessComparison cmp;
  ComparisonRow base{n.regime, n.mean, natural.accuracy, 0.0, 0.0,
                     Vector(n.per_example.size(), 0.0)};
  cmp.rows.push_back(std::move(base));
  for (const auto& o : others) {
    const GiniReport& r = o.report;
    if (r.split_seed != n.split_seed || r.per_example.size() != n.per_example.size() ||
        r.baseline != n.baseline)
      throw DataError("compare: report '" + r.regime + "' was computed on a different split or baseline");
    ComparisonRow row{r.regime, r.mean, o.accuracy, r.mean - n.mean, natural.accuracy - o.accuracy,
                      Vector(r.per_example.size())};
    for (std::size_t i = 0; i < row.per_example_dG.size(); ++i)
      row.per_example_dG[i] = r.per_example[i] - n.per_example[i];
    cmp.rows.push_back(std::move(row));
  }
  return cmp;
}

std::string table1_csv(const SparsenessComparison& cmp, const std::string& dataset,
                       const std::string& attr) {
  std::string out = "dataset,attr,model,dG,AcDrop\n";
  for (const auto& r : cmp.rows)
    out += dataset + "," + attr + ",\"" + r.model + "\"," + format_double(r.dG) + "," +
           format_double(100.0 * r.acdrop) + "\n";
  return out;
}

std::string per_example_dg_csv(const SparsenessComparison& cmp) {
  std::string out = "model,example,dG\n";
  for (const auto& r : cmp.rows)
    for (std::size_t i = 0; i < r.per_example_dG.size(); ++i)
      out += "\"" + r.model + "\"," + std::to_string(i) + "," + format_double(r.per_example_dG[i]) +
             "\n";
  return out;
}

}  // namespace attrsparse
