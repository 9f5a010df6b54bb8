#include <catch2/catch_amalgamated.hpp>

#include "ultradiff/tree.hpp"
#include "ultradiff/tree_io.hpp"

using namespace ultradiff;

namespace {

TreeSpec padic(std::uint32_t p, int depth, MetricKind metric = MetricKind::Canonical) {
  TreeSpec s;
  s.family = PAdicFamily{p};
  s.depth = depth;
  s.metric.kind = metric;
  return s;
}

TreeSpec level_regular(std::vector<std::uint32_t> pattern, int depth) {
  TreeSpec s;
  s.family = LevelRegularFamily{std::move(pattern)};
  s.depth = depth;
  return s;
}

}  // namespace

TEST_CASE("p-adic counts, diameters, and measures are exact", "[tree]") {
  const auto t = build_tree(padic(2, 3));
  REQUIRE(t.level_uniform());
  REQUIRE(t.aligned());
  REQUIRE(t.vertex_count(0) == 1);
  REQUIRE(t.vertex_count(3) == 8);
  REQUIRE(t.total_vertex_count() == 15);
  for (int l = 0; l <= 3; ++l) {
    const Vertex v = t.representative_vertex(l);
    REQUIRE(t.diameter(v) == Rational(1, BigInt(1) << l));
    REQUIRE(t.measure(v) == Rational(1, BigInt(1) << l));
  }
  REQUIRE(t.child_count(Vertex{}) == 2);
  REQUIRE(t.child_count(parse_address("0.1.0")) == 0);
}

TEST_CASE("level-regular pattern cycles by level", "[tree]") {
  const auto t = build_tree(level_regular({2, 3}, 2));
  REQUIRE(t.vertex_count(2) == 6);
  REQUIRE(t.diameter(t.representative_vertex(2)) == Rational(1, 6));
  REQUIRE(t.branching_at(0) == 2);
  REQUIRE(t.branching_at(1) == 3);

  const auto deep = build_tree(level_regular({2, 3}, 4));
  REQUIRE(deep.branching_at(2) == 2);
  REQUIRE(deep.vertex_count(4) == 36);
}

TEST_CASE("Baire metric halves diameters while equity splits by branching", "[tree]") {
  const auto t = build_tree(padic(3, 2, MetricKind::Baire));
  REQUIRE_FALSE(t.aligned());
  REQUIRE(t.diameter(t.representative_vertex(1)) == Rational(1, 2));
  REQUIRE(t.diameter(t.representative_vertex(2)) == Rational(1, 4));
  REQUIRE(t.measure(t.representative_vertex(1)) == Rational(1, 3));
  REQUIRE(t.measure(t.representative_vertex(2)) == Rational(1, 9));
}

TEST_CASE("equity recursion holds vertex by vertex on a random tree", "[tree]") {
  TreeSpec spec;
  spec.family = RandomBoundedFamily{2, 5, 20260815};
  spec.depth = 5;
  const auto t = build_tree(spec);
  REQUIRE_FALSE(t.level_uniform());

  Rational leaf_total(0);
  for (int l = 0; l <= t.depth(); ++l) {
    for (std::uint64_t i = 0; i < t.node_count(l); ++i) {
      const Vertex v = t.node_address(l, i);
      const std::uint32_t c = t.child_count(v);
      if (l < t.depth()) {
        REQUIRE(c >= 2);
        REQUIRE(c <= 5);
        Vertex child = v;
        child.path.push_back(c - 1);
        REQUIRE(t.measure(child) == t.measure(v) / c);
        REQUIRE(t.diameter(child) == t.diameter(v) / c);
      } else {
        leaf_total += t.measure(v);
      }
    }
  }
  REQUIRE(leaf_total == Rational(1));
  REQUIRE(t.aligned());
}

TEST_CASE("sibling measures add up to the parent measure exactly", "[tree]") {
  const auto t = materialize(build_tree(padic(3, 5)));
  for (int l = 0; l < t.depth(); ++l) {
    for (std::uint64_t i = 0; i < t.node_count(l); ++i) {
      const Vertex v = t.node_address(l, i);
      Rational child_sum(0);
      for (std::uint32_t d = 0; d < t.child_count(v); ++d) {
        Vertex child = v;
        child.path.push_back(d);
        child_sum += t.measure(child);
      }
      REQUIRE(child_sum == t.measure(v));
    }
  }
}

TEST_CASE("join and distance follow the common-prefix rule", "[tree]") {
  const auto t = build_tree(padic(2, 3));
  const Vertex x = parse_address("0.0.0");
  const Vertex y = parse_address("0.1.0");
  REQUIRE(join(x, y) == parse_address("0"));
  REQUIRE(t.distance(x, y) == Rational(1, 2));
  REQUIRE(t.distance(x, x) == Rational(0));

  const auto baire = build_tree(padic(3, 3, MetricKind::Baire));
  const Vertex bx = parse_address("1.2.0");
  const Vertex by = parse_address("1.2.2");
  REQUIRE(join(bx, by).level() == 2);
  REQUIRE(baire.distance(bx, by) == Rational(1, 4));
}

TEST_CASE("strong triangle inequality holds exhaustively at small depth", "[tree]") {
  for (const auto& spec : {padic(2, 3), level_regular({2, 3}, 3), padic(3, 2, MetricKind::Baire)}) {
    const auto t = build_tree(spec);
    const auto leaves = t.vertices_at_level(t.depth());
    for (const auto& x : leaves)
      for (const auto& y : leaves)
        for (const auto& z : leaves) {
          const Rational dxz = t.distance(x, z);
          const Rational dxy = t.distance(x, y);
          const Rational dyz = t.distance(y, z);
          REQUIRE(dxz <= std::max(dxy, dyz));
        }
  }
}

TEST_CASE("leaf indexing is lexicographic and invertible in both modes", "[tree]") {
  const auto uniform = build_tree(level_regular({3, 2}, 3));
  const auto explicit_copy = materialize(uniform);
  const std::size_t n = uniform.leaf_count_capped(1000);
  REQUIRE(n == 18);
  for (std::size_t i = 0; i < n; ++i) {
    const Vertex v = uniform.leaf_at(i);
    REQUIRE(uniform.leaf_index(v) == i);
    REQUIRE(explicit_copy.leaf_at(i) == v);
    REQUIRE(explicit_copy.leaf_index(v) == i);
    REQUIRE(explicit_copy.measure(v) == uniform.measure(v));
    REQUIRE(explicit_copy.diameter(v) == uniform.diameter(v));
  }
}

TEST_CASE("descendant counts match explicit ranges", "[tree]") {
  const auto t = build_tree(level_regular({2, 3}, 4));
  const Vertex v = parse_address("1");
  REQUIRE(t.descendant_count(v, 1) == 1);
  REQUIRE(t.descendant_count(v, 2) == 3);
  REQUIRE(t.descendant_count(v, 4) == 18);

  const auto m = materialize(t);
  const auto [lo, hi] = m.descendant_range(v, 4);
  REQUIRE(hi - lo == 18);
}

TEST_CASE("random trees are reproducible from the seed", "[tree]") {
  TreeSpec spec;
  spec.family = RandomBoundedFamily{2, 4, 7};
  spec.depth = 4;
  const auto a = build_tree(spec);
  const auto b = build_tree(spec);
  REQUIRE(a.leaf_count() == b.leaf_count());
  for (int l = 0; l < 4; ++l)
    for (std::uint64_t i = 0; i < a.node_count(l); ++i)
      REQUIRE(a.node_child_count(l, i) == b.node_child_count(l, i));

  spec.family = RandomBoundedFamily{2, 4, 8};
  const auto c = build_tree(spec);
  REQUIRE(a.leaf_count() != c.leaf_count());  // holds for these seeds
}

TEST_CASE("malformed specs are rejected with precise messages", "[tree]") {
  REQUIRE_THROWS_AS(build_tree(padic(2, 0)), ValidationError);
  REQUIRE_THROWS_AS(build_tree(padic(1, 3)), ValidationError);
  REQUIRE_THROWS_AS(build_tree(level_regular({2, 1}, 3)), ValidationError);
  REQUIRE_THROWS_AS(build_tree(level_regular({}, 3)), ValidationError);

  TreeSpec bad_random;
  bad_random.family = RandomBoundedFamily{5, 3, 1};
  bad_random.depth = 2;
  REQUIRE_THROWS_AS(build_tree(bad_random), ValidationError);

  TreeSpec bad_metric = padic(2, 2);
  bad_metric.metric.kind = MetricKind::ExplicitDiameters;
  bad_metric.metric.per_level = {Rational(1), Rational(1, 2), Rational(1, 2)};  // not strictly decreasing
  REQUIRE_THROWS_AS(build_tree(bad_metric), ValidationError);

  TreeSpec stray_values = padic(2, 2);
  stray_values.metric.per_level = {Rational(1), Rational(1, 2), Rational(1, 4)};
  REQUIRE_THROWS_AS(build_tree(stray_values), ValidationError);
}

TEST_CASE("addresses are validated against the tree", "[tree]") {
  const auto t = build_tree(padic(2, 2));
  REQUIRE_THROWS_AS(t.diameter(parse_address("2")), ValidationError);
  REQUIRE_THROWS_AS(t.diameter(parse_address("0.0.0")), ValidationError);
  REQUIRE_THROWS_AS(t.distance(parse_address("0"), parse_address("0.0")), ValidationError);
  REQUIRE_THROWS_AS(parse_address("0..1"), ValidationError);
  REQUIRE_THROWS_AS(parse_address("0.x"), ValidationError);
}

TEST_CASE("enumeration caps guard huge trees", "[tree]") {
  const auto t = build_tree(padic(5, 20));
  REQUIRE(t.vertex_count(20) == BigInt("95367431640625"));
  REQUIRE_THROWS_AS(t.vertices_at_level(20), ScaleError);
  REQUIRE_THROWS_AS(t.leaf_count_capped(4096), ScaleError);
  REQUIRE_THROWS_AS(materialize(t), ScaleError);
}

TEST_CASE("explicit per-vertex diameters must be equitising", "[tree]") {
  TreeSpec spec;
  spec.family = PAdicFamily{2};
  spec.depth = 1;
  spec.metric.kind = MetricKind::ExplicitDiameters;
  spec.metric.per_vertex = {{"", Rational(1)}, {"0", Rational(1, 2)}, {"1", Rational(1, 3)}};
  REQUIRE_THROWS_AS(build_tree(spec), ValidationError);

  spec.metric.per_vertex = {{"", Rational(1)}, {"0", Rational(1, 3)}, {"1", Rational(1, 3)}};
  const auto t = build_tree(spec);
  REQUIRE(t.diameter(parse_address("1")) == Rational(1, 3));
  REQUIRE(t.measure(parse_address("1")) == Rational(1, 2));
  REQUIRE_FALSE(t.aligned());
}

TEST_CASE("nested-array tree files parse into explicit families", "[tree]") {
  const auto j = nlohmann::json::parse(R"([[[],[]],[[],[],[]]])");
  const ExplicitFamily fam = parse_explicit_tree(j);
  REQUIRE(fam.child_counts.size() == 2);
  REQUIRE(fam.child_counts[0] == std::vector<std::uint32_t>{2});
  REQUIRE(fam.child_counts[1] == std::vector<std::uint32_t>{2, 3});

  TreeSpec spec;
  spec.family = fam;
  spec.depth = 2;
  const auto t = build_tree(spec);
  REQUIRE(t.leaf_count() == 5);
  REQUIRE(t.measure(parse_address("1.2")) == Rational(1, 6));
  REQUIRE(t.diameter(parse_address("0.1")) == Rational(1, 4));

  REQUIRE_THROWS_AS(parse_explicit_tree(nlohmann::json::parse("[[],[[],[]]]")), ValidationError);
  REQUIRE_THROWS_AS(parse_explicit_tree(nlohmann::json::parse("[[[]],[[],[]]]")), ValidationError);
}

TEST_CASE("adjacency tree files parse and validate completeness", "[tree]") {
  const auto j = nlohmann::json::parse(R"({"": 2, "0": 2, "1": 3})");
  const ExplicitFamily fam = parse_explicit_tree(j);
  REQUIRE(fam.child_counts[0] == std::vector<std::uint32_t>{2});
  REQUIRE(fam.child_counts[1] == std::vector<std::uint32_t>{2, 3});

  REQUIRE_THROWS_AS(parse_explicit_tree(nlohmann::json::parse(R"({"": 2, "0": 2})")), ValidationError);
  REQUIRE_THROWS_AS(parse_explicit_tree(nlohmann::json::parse(R"({"": 2, "0": 2, "1": 3, "0.0": 2})")),
                    ValidationError);
}

TEST_CASE("rational literals parse exactly", "[tree]") {
  REQUIRE(parse_rational("1/6") == Rational(1, 6));
  REQUIRE(parse_rational("3") == Rational(3));
  REQUIRE(parse_rational("0.25") == Rational(1, 4));
  REQUIRE(parse_rational("-1/2") == Rational(-1, 2));
  REQUIRE_THROWS_AS(parse_rational("1/0"), ValidationError);
  REQUIRE_THROWS_AS(parse_rational("abc"), ValidationError);
  REQUIRE(format_rational(Rational(2, 6)) == "1/3");
}
