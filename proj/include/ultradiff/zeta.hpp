#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "ultradiff/numeric.hpp"
#include "ultradiff/tree.hpp"

namespace ultradiff {

// ---------------------------------------------------------------------------
// Truncated Dirichlet series of the diameters
// ---------------------------------------------------------------------------

/// zeta(s) truncated at depth `levels`: the exact finite sum of diam(ball)^s
/// over all balls down to that level, reported per level.
struct ZetaPartial {
  double s = 0;
  int levels = 0;
  std::vector<double> level_terms;  // index = level
  std::vector<double> cumulative;   // running totals
  double value = 0;
};

inline ZetaPartial zeta_partial(const TruncatedTree& tree, double s, int levels = -1) {
  if (levels < 0) levels = tree.depth();
  if (levels > tree.depth())
    throw ValidationError("zeta truncation level " + std::to_string(levels) + " exceeds the tree depth " +
                          std::to_string(tree.depth()));
  ZetaPartial z;
  z.s = s;
  z.levels = levels;
  z.level_terms.reserve(static_cast<std::size_t>(levels) + 1);
  for (int l = 0; l <= levels; ++l) {
    if (tree.level_uniform()) {
      const double count = to_double(tree.vertex_count(l));
      const double diam = to_double(tree.diameter(tree.representative_vertex(l)));
      z.level_terms.push_back(count * std::pow(diam, s));
    } else {
      std::vector<double> terms;
      terms.reserve(tree.node_count(l));
      for (std::uint64_t i = 0; i < tree.node_count(l); ++i)
        terms.push_back(std::pow(to_double(tree.node_diameter(l, i)), s));
      z.level_terms.push_back(pairwise_sum(terms));
    }
  }
  z.cumulative.resize(z.level_terms.size());
  double run = 0;
  for (std::size_t i = 0; i < z.level_terms.size(); ++i) {
    run += z.level_terms[i];
    z.cumulative[i] = run;
  }
  z.value = run;
  return z;
}

// ---------------------------------------------------------------------------
// Abscissa of convergence
// ---------------------------------------------------------------------------

enum class SeriesClass { Convergent, Divergent, Indeterminate };
enum class EstimateStatus { Resolved, Indeterminate };

/// Root-test bisection result. `status` is Indeterminate when the bracket does
/// not straddle the convergence boundary at this truncation depth; no value is
/// extrapolated in that case.
struct AbscissaEstimate {
  double s0 = std::numeric_limits<double>::quiet_NaN();
  double bracket_lo = 0, bracket_hi = 0;
  double tolerance = 0;
  EstimateStatus status = EstimateStatus::Indeterminate;
  double root_at_lo = 0, root_at_hi = 0;  // root-test values at the initial bracket ends
};

namespace detail {

/// max over the deepest levels of (level term)^(1/level), in log space so
/// depth-20 trees with s near 8 stay far from underflow.
inline double root_test(const TruncatedTree& tree, double s) {
  const int L = tree.depth();
  const int window_lo = std::max(1, L - 2);
  double best = -std::numeric_limits<double>::infinity();
  if (tree.level_uniform()) {
    double log_count = 0, log_diam = 0;
    for (int l = 1; l <= L; ++l) {
      log_count += std::log(static_cast<double>(tree.branching_at(l - 1)));
      switch (tree.metric().kind) {
        case MetricKind::Canonical:
          log_diam = -log_count;
          break;
        case MetricKind::Baire:
          log_diam = -l * std::log(2.0);
          break;
        case MetricKind::ExplicitDiameters:
          log_diam = std::log(to_double(tree.diameter(tree.representative_vertex(l))));
          break;
      }
      if (l >= window_lo) best = std::max(best, (log_count + s * log_diam) / l);
    }
    return std::exp(best);
  }
  const ZetaPartial z = zeta_partial(tree, s);
  for (int l = window_lo; l <= L; ++l)
    best = std::max(best, std::log(z.level_terms[static_cast<std::size_t>(l)]) / l);
  return std::exp(best);
}

}  // namespace detail

/// Bisects the root test of the level terms over [lo, hi]. Depth >= 6 is
/// recommended; below that the root test saturates and the result degrades.
inline AbscissaEstimate estimate_abscissa(const TruncatedTree& tree, double tolerance = 1e-4, double lo = 0.0,
                                          double hi = 8.0) {
  if (!(tolerance > 0)) throw ValidationError("abscissa tolerance must be positive");
  if (!(lo < hi)) throw ValidationError("abscissa bracket must satisfy lo < hi");
  AbscissaEstimate est;
  est.tolerance = tolerance;
  est.bracket_lo = lo;
  est.bracket_hi = hi;
  if (tree.depth() < 2) return est;  // root test needs at least two levels

  est.root_at_lo = detail::root_test(tree, lo);
  est.root_at_hi = detail::root_test(tree, hi);
  const bool lo_divergent = est.root_at_lo >= 1.0;
  const bool hi_divergent = est.root_at_hi >= 1.0;
  if (!lo_divergent || hi_divergent) return est;  // boundary outside the bracket

  double a = lo, b = hi;
  for (int iter = 0; iter < 200 && (b - a) > tolerance; ++iter) {
    const double mid = 0.5 * (a + b);
    (detail::root_test(tree, mid) >= 1.0 ? a : b) = mid;
  }
  est.bracket_lo = a;
  est.bracket_hi = b;
  est.s0 = 0.5 * (a + b);
  est.status = EstimateStatus::Resolved;
  return est;
}

// ---------------------------------------------------------------------------
// kappa and the factorisation property
// ---------------------------------------------------------------------------

/// kappa_v(s): the truncated sum of diam(ball)^s over the descendants of v
/// (v included) down to the tree depth.
inline double kappa(const TruncatedTree& tree, const Vertex& v, double s) {
  tree.validate_vertex(v);
  const int L = tree.depth();
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(L - v.level()) + 1);
  if (tree.level_uniform()) {
    BigInt count = 1;
    for (int k = v.level(); k <= L; ++k) {
      const double diam = to_double(tree.diameter(tree.representative_vertex(k)));
      terms.push_back(to_double(count) * std::pow(diam, s));
      if (k < L) count *= tree.branching_at(k);
    }
  } else {
    for (int k = v.level(); k <= L; ++k) {
      const auto [lo, hi] = tree.descendant_range(v, k);
      std::vector<double> level;
      level.reserve(hi - lo);
      for (std::uint64_t i = lo; i < hi; ++i) level.push_back(std::pow(to_double(tree.node_diameter(k, i)), s));
      terms.push_back(pairwise_sum(level));
    }
  }
  return pairwise_sum(terms);
}

struct FactorisationRow {
  Vertex v;
  double s = 0;
  double kappa_value = 0;
  double zeta_matched = 0;   // whole-tree zeta truncated to the same number of levels kappa sees
  double predicted = 0;      // diam(v)^(s - s0 + 1)
  double rel_dev = 0;        // against zeta_matched; the truncation-corrected deviation
  double rel_dev_raw = 0;    // against full-depth zeta, no correction
  double tail_fraction = 0;  // share of full-depth zeta invisible to the matched sum
  bool pass = false;
};

struct FactorisationReport {
  double s0 = 0;
  bool s0_pinned = false;
  double tolerance = 0;
  std::vector<FactorisationRow> rows;
  bool all_pass = true;
};

/// Tests kappa_v(s) = diam(v)^(s-s0+1) * zeta(s) vertex by vertex, evaluating
/// the written exponent as-is. Truncation is handled by depth-matching: a
/// vertex at level l sees L-l subtree levels, so it is compared against the
/// whole-tree zeta truncated to L-l levels. Level-uniform trees sample one
/// vertex per level (siblings are indistinguishable); explicit trees sample
/// every vertex up to a cap, then fall back to one per level.
inline FactorisationReport check_factorisation(const TruncatedTree& tree, const std::vector<double>& s_grid,
                                               double tolerance, std::optional<double> s0_pin = std::nullopt) {
  FactorisationReport report;
  report.tolerance = tolerance;
  report.s0_pinned = s0_pin.has_value();
  if (s0_pin) {
    report.s0 = *s0_pin;
  } else {
    const AbscissaEstimate est = estimate_abscissa(tree);
    if (est.status == EstimateStatus::Indeterminate)
      throw ValidationError("abscissa estimate is indeterminate at this depth; pin s0 explicitly");
    report.s0 = est.s0;
  }

  std::vector<Vertex> sample;
  if (!tree.level_uniform() && tree.total_vertex_count() <= 4096) {
    for (int l = 0; l <= tree.depth(); ++l)
      for (std::uint64_t i = 0; i < tree.node_count(l); ++i) sample.push_back(tree.node_address(l, i));
  } else {
    for (int l = 0; l <= tree.depth(); ++l) sample.push_back(tree.representative_vertex(l));
  }

  for (double s : s_grid) {
    const ZetaPartial full = zeta_partial(tree, s);
    for (const Vertex& v : sample) {
      FactorisationRow row;
      row.v = v;
      row.s = s;
      row.kappa_value = kappa(tree, v, s);
      row.zeta_matched = full.cumulative[static_cast<std::size_t>(tree.depth() - v.level())];
      row.predicted = std::pow(to_double(tree.diameter(v)), s - report.s0 + 1.0);
      row.rel_dev = std::abs(row.kappa_value / row.zeta_matched - row.predicted) / row.predicted;
      row.rel_dev_raw = std::abs(row.kappa_value / full.value - row.predicted) / row.predicted;
      row.tail_fraction = (full.value - row.zeta_matched) / full.value;
      row.pass = row.rel_dev < tolerance;
      report.all_pass = report.all_pass && row.pass;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Connes measure
// ---------------------------------------------------------------------------

struct MeasureRow {
  Vertex v;
  Rational diameter;
  Rational measure;
};

struct ConnesMeasureTable {
  std::vector<MeasureRow> rows;  // ordered by (level, address)
  bool additivity_exact = false;
  Rational leaf_total;
};

/// The measure induced by the equity recursion (children split the parent
/// equally), which is the Connes measure of an equitising metric. Additivity
/// and total mass are verified in exact arithmetic, not floating point.
inline ConnesMeasureTable connes_measure(const TruncatedTree& tree,
                                         std::uint64_t row_cap = TruncatedTree::kDefaultMaterializeCap) {
  ConnesMeasureTable table;
  if (tree.total_vertex_count() > row_cap)
    throw ScaleError("tree has " + tree.total_vertex_count().str() + " balls, exceeding the row cap of " +
                     std::to_string(row_cap));
  table.additivity_exact = true;
  for (int l = 0; l <= tree.depth(); ++l) {
    for (const Vertex& v : tree.vertices_at_level(l, row_cap)) {
      table.rows.push_back({v, tree.diameter(v), tree.measure(v)});
      if (l < tree.depth()) {
        const std::uint32_t c = tree.child_count(v);
        Vertex child = v;
        child.path.push_back(0);
        if (tree.measure(child) * c != tree.measure(v)) table.additivity_exact = false;
      }
    }
  }
  table.leaf_total = Rational(0);
  for (const Vertex& v : tree.vertices_at_level(tree.depth(), row_cap)) table.leaf_total += tree.measure(v);
  table.additivity_exact = table.additivity_exact && table.leaf_total == Rational(1);
  return table;
}

struct LimitCheckRow {
  double eps = 0;
  double ratio = 0;            // kappa_v(s0+eps) / zeta(s0+eps), both truncated
  double recursion_value = 0;  // the equity-recursion measure of v
  double abs_dist = 0;
};

struct LimitCheckReport {
  Vertex v;
  double s0 = 0;
  std::vector<LimitCheckRow> rows;  // ordered by descending eps
  bool dist_decreasing = false;     // distances shrink monotonically toward the limit
};

/// Diagnostic for mu([v]) = lim_{s -> s0+} kappa_v(s)/zeta(s): evaluates the
/// truncated ratio along an eps ladder. At finite depth the ratio carries a
/// truncation bias that grows as eps shrinks; depth >= 20 is recommended.
inline LimitCheckReport connes_measure_limit_check(const TruncatedTree& tree, const Vertex& v,
                                                   std::vector<double> eps_list,
                                                   std::optional<double> s0_pin = std::nullopt) {
  if (eps_list.empty()) throw ValidationError("eps list must be non-empty");
  for (double e : eps_list)
    if (!(e > 0)) throw ValidationError("eps values must be positive");
  LimitCheckReport report;
  report.v = v;
  if (s0_pin) {
    report.s0 = *s0_pin;
  } else {
    const AbscissaEstimate est = estimate_abscissa(tree);
    if (est.status == EstimateStatus::Indeterminate)
      throw ValidationError("abscissa estimate is indeterminate at this depth; pin s0 explicitly");
    report.s0 = est.s0;
  }
  std::sort(eps_list.begin(), eps_list.end(), std::greater<>());
  const double mu = to_double(tree.measure(v));
  for (double eps : eps_list) {
    LimitCheckRow row;
    row.eps = eps;
    row.ratio = kappa(tree, v, report.s0 + eps) / zeta_partial(tree, report.s0 + eps).value;
    row.recursion_value = mu;
    row.abs_dist = std::abs(row.ratio - mu);
    report.rows.push_back(row);
  }
  report.dist_decreasing = true;
  for (std::size_t i = 1; i < report.rows.size(); ++i)
    if (report.rows[i].abs_dist >= report.rows[i - 1].abs_dist) report.dist_decreasing = false;
  return report;
}

// ---------------------------------------------------------------------------
// Sphere measure
// ---------------------------------------------------------------------------

struct SphereMeasure {
  Vertex witness;           // the ancestor ball whose diameter equals the radius
  Rational value;           // mu(ball) * (1 - 1/childCount)
  Rational aligned_form;    // (1 - 1/childCount) * radius
  bool aligned_match = false;
};

/// mu of the sphere {y : d(z, y) = radius} around a boundary point z. The
/// radius must be an attained diameter, i.e. the diameter of an ancestor of z
/// strictly above the leaf level.
inline SphereMeasure sphere_measure(const TruncatedTree& tree, const Vertex& z, const Rational& radius) {
  tree.require_leaf(z);
  std::string attained;
  for (int l = 0; l < tree.depth(); ++l) {
    Vertex w;
    w.path.assign(z.path.begin(), z.path.begin() + l);
    const Rational d = tree.diameter(w);
    if (d == radius) {
      SphereMeasure out;
      out.witness = w;
      const std::uint32_t n = tree.child_count(w);
      out.value = tree.measure(w) * Rational(n - 1, n);
      out.aligned_form = radius * Rational(n - 1, n);
      out.aligned_match = out.value == out.aligned_form;
      return out;
    }
    if (!attained.empty()) attained += ", ";
    attained += format_rational(d);
  }
  throw ValidationError("radius " + format_rational(radius) + " is not an attained distance from \"" +
                        format_address(z) + "\"; attained diameters are " + attained);
}

/// Double-radius convenience: resolves against attained diameters within a
/// relative 1e-12 and reports the nearest attained values on failure.
inline SphereMeasure sphere_measure(const TruncatedTree& tree, const Vertex& z, double radius) {
  tree.require_leaf(z);
  for (int l = 0; l < tree.depth(); ++l) {
    Vertex w;
    w.path.assign(z.path.begin(), z.path.begin() + l);
    const double d = to_double(tree.diameter(w));
    if (std::abs(d - radius) <= 1e-12 * std::max(d, radius)) return sphere_measure(tree, z, tree.diameter(w));
  }
  throw ValidationError("radius " + std::to_string(radius) + " is not an attained distance from \"" +
                        format_address(z) + "\"");
}

}  // namespace ultradiff
