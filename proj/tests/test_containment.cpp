#include <gtest/gtest.h>

#include <random>

#include "cqmine/containment.hpp"
#include "fixtures.hpp"
#include "oracle.hpp"

using namespace cqmine;
using cqmine::fixture::q;

namespace {

const Query kDuvelVisits = q("Q1(x,y) :- likes(x,'Duvel'), visits(x,y).");
const Query kDuvelVisitsServing = q("Q2(x,y) :- likes(x,'Duvel'), visits(x,y), serves(y,'Duvel').");

// Renames variables by a random bijection and shuffles the body.
Query scramble(const Query& x, std::mt19937& rng) {
  auto vars = x.variables();
  std::vector<int> ids(vars.begin(), vars.end()), perm = ids;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::map<Term, Term> sub;
  for (std::size_t i = 0; i < ids.size(); ++i) sub[Term::var(ids[i])] = Term::var(perm[i] + 10);
  std::vector<int> head;
  for (int v : x.head()) head.push_back(sub.at(Term::var(v)).id);
  return substitute(x, sub, head);
}

// q1 built from q2 by adding atoms and merging variables, so q1 ⊆ q2 is likely.
Query specialize(const Query& base, std::mt19937& rng, const Schema& schema) {
  auto extra = oracle::random_query(rng, schema, 1, 4, {"a", "b"});
  std::vector<Atom> body = base.body();
  for (const auto& a : extra.body()) body.push_back(a);
  Query merged(base.head(), body);
  auto vars = merged.variables();
  std::vector<int> ids(vars.begin(), vars.end());
  std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
  std::map<Term, Term> sub;
  if (std::bernoulli_distribution(0.5)(rng)) {
    int from = ids[pick(rng)], to = ids[pick(rng)];
    if (std::find(base.head().begin(), base.head().end(), from) == base.head().end())
      sub[Term::var(from)] = Term::var(to);
  }
  return substitute(merged, sub, base.head());
}

}  // namespace

TEST(Containment, ExtraAtomNarrowsQuery) {
  EXPECT_TRUE(is_contained(kDuvelVisitsServing, kDuvelVisits));
  EXPECT_FALSE(is_contained(kDuvelVisits, kDuvelVisitsServing));
  EXPECT_FALSE(is_equivalent(kDuvelVisits, kDuvelVisitsServing));
  auto m = find_containment_mapping(kDuvelVisits, kDuvelVisitsServing);
  ASSERT_TRUE(m.has_value());
}

TEST(Containment, AtomOrderIsIrrelevant) {
  EXPECT_TRUE(is_equivalent(q("Q(x) :- likes(x,y), visits(x,z)."), q("Q(x) :- visits(x,z), likes(x,y).")));
}

TEST(Containment, RedundantAtom) {
  EXPECT_TRUE(is_equivalent(q("Q(x1,x2) :- likes(x1,x2), likes(x1,x3)."), q("Q(x1,x2) :- likes(x1,x2).")));
}

TEST(Containment, HeadArityMismatchIsNotContainment) {
  EXPECT_FALSE(is_contained(q("Q(x) :- likes(x,y)."), q("Q(x,y) :- likes(x,y).")));
  EXPECT_THROW(find_containment_mapping(q("Q(x) :- likes(x,y)."), q("Q(x,y) :- likes(x,y).")), ConfigError);
}

TEST(Containment, HeadIsMappedPointwise) {
  EXPECT_FALSE(is_contained(q("Q(x,y) :- likes(x,y)."), q("Q(y,x) :- likes(x,y).")));
  EXPECT_TRUE(is_contained(q("Q(x,x2) :- likes(x,'Duvel'), likes(x2,'Duvel')."),
                           q("Q(a,b) :- likes(a,c), likes(b,c).")));
}

TEST(Containment, SymbolsMapToConstantsOrSymbolsOnly) {
  auto sym = q("Q(x) :- likes(x,$c).");
  EXPECT_TRUE(is_contained(q("Q(x) :- likes(x,'Duvel')."), sym));
  EXPECT_FALSE(is_contained(q("Q(x) :- likes(x,y)."), sym));
  EXPECT_TRUE(is_contained(sym, q("Q(x) :- likes(x,y).")));
  EXPECT_FALSE(is_contained(sym, q("Q(x) :- likes(x,'Duvel').")));
}

TEST(Diagonal, SameBodyLargerHead) {
  EXPECT_TRUE(is_diagonally_contained(q("Q(x) :- likes(x,z)."), q("Q(x,z) :- likes(x,z).")));
  EXPECT_FALSE(is_diagonally_contained(q("Q(x,z) :- likes(x,z)."), q("Q(x) :- likes(x,z).")));
}

TEST(Diagonal, ProjectionOfCrossProduct) {
  EXPECT_TRUE(is_diagonally_contained(q("Q(x1) :- likes(x1,x2)."),
                                      q("Q(x1,x2,x3,x4) :- likes(x1,x2), likes(x3,x4).")));
}

TEST(Diagonal, AllowsReorderingRetainedPositions) {
  EXPECT_TRUE(is_diagonally_contained(q("Q(y,x) :- likes(x,y)."), q("Q(x,y,z) :- likes(x,y), likes(x,z).")));
  // the extra visits atom has no image in q1
  EXPECT_FALSE(is_diagonally_contained(q("Q(y,x) :- likes(x,y)."), q("Q(x,y,z) :- likes(x,y), visits(x,z).")));
}

TEST(Diagonal, ImpliedByContainment) {
  EXPECT_TRUE(is_diagonally_contained(kDuvelVisitsServing, kDuvelVisits));
}

TEST(Minimize, SpecExamples) {
  EXPECT_EQ(render_query(minimize(q("Q(x1,x2) :- likes(x1,x2), likes(x1,x3)."))), "Q(x1,x2) :- likes(x1,x2).");
  EXPECT_EQ(render_query(minimize(q("Q(x1) :- likes(x1,x2), likes(x3,x2), likes(x1,x4)."))),
            "Q(x1) :- likes(x1,x2).");
  auto m = q("Q(x,y) :- likes(x,'Duvel'), visits(x,y), serves(y,'Duvel').");
  EXPECT_EQ(render_query(minimize(m)), render_query(m));
}

TEST(Minimize, DistinctSymbolsStayDistinct) {
  auto x = q("Q(x) :- likes(x,$a), likes(x,$b).");
  EXPECT_EQ(minimize(x).body().size(), 2u);
}

TEST(CanonicalKey, RenamingsCollide) {
  EXPECT_EQ(canonical_key(q("Q(x1,x2) :- likes(x1,x2)."), false),
            canonical_key(q("Q(x2,x1) :- likes(x2,x1)."), false));
}

TEST(CanonicalKey, HeadPermutationOnlyWhenRequested) {
  auto a = q("Q(a,b) :- likes(a,b)."), b = q("Q(b,a) :- likes(a,b).");
  EXPECT_NE(canonical_key(a, false), canonical_key(b, false));
  EXPECT_EQ(canonical_key(a, true), canonical_key(b, true));
}

TEST(CanonicalKey, EquivalentQueriesCollideAfterMinimization) {
  EXPECT_EQ(canonical_key(q("Q(x1,x2) :- likes(x1,x2), likes(x1,x3)."), false),
            canonical_key(q("Q(a,b) :- likes(a,b)."), false));
}

// ---------------------------------------------------------------------------
// Properties on random queries.

class ContainmentProperties : public ::testing::Test {
 protected:
  std::mt19937 rng{20240611};
  Schema schema = oracle::RandomSchema{}.schema;
  std::vector<std::string> constants{"a", "b"};

  std::pair<Query, Query> random_pair() {
    auto q2 = oracle::random_query(rng, schema, 3, 4, constants);
    if (std::bernoulli_distribution(0.5)(rng)) {
      auto q1 = specialize(q2, rng, schema);
      if (q1.body().size() <= 3 && q1.is_safe()) return {scramble(q1, rng), q2};
    }
    auto q1 = oracle::random_query(rng, schema, 3, 4, constants);
    while (q1.head().size() != q2.head().size()) q1 = oracle::random_query(rng, schema, 3, 4, constants);
    return {q1, q2};
  }
};

TEST_F(ContainmentProperties, AgreesWithCanonicalDatabase) {
  int positives = 0;
  for (int i = 0; i < 1500; ++i) {
    auto [q1, q2] = random_pair();
    bool expected = oracle::contained_by_canonical_database(q1, q2);
    ASSERT_EQ(is_contained(q1, q2), expected) << print_query(q1) << "  vs  " << print_query(q2);
    positives += expected;
  }
  EXPECT_GT(positives, 200);
}

TEST_F(ContainmentProperties, SoundOnRandomInstances) {
  std::vector<std::string> domain{"a", "b", "c", "d"};
  std::vector<Instance> instances;
  for (int i = 0; i < 100; ++i) instances.push_back(oracle::random_instance(rng, schema, 8, domain));
  int checked = 0;
  for (int i = 0; i < 400 && checked < 60; ++i) {
    auto [q1, q2] = random_pair();
    if (!is_contained(q1, q2)) continue;
    ++checked;
    for (const auto& inst : instances) {
      auto a1 = oracle::answer(q1, inst), a2 = oracle::answer(q2, inst);
      ASSERT_TRUE(std::includes(a2.begin(), a2.end(), a1.begin(), a1.end()))
          << print_query(q1) << "  vs  " << print_query(q2);
    }
  }
  EXPECT_GE(checked, 30);
}

TEST_F(ContainmentProperties, MinimizeIsEquivalentAndIdempotent) {
  for (int i = 0; i < 500; ++i) {
    auto x = oracle::random_query(rng, schema, 4, 4, constants);
    auto m = minimize(x);
    ASSERT_TRUE(is_equivalent(x, m)) << print_query(x);
    ASSERT_LE(m.body().size(), x.body().size());
    ASSERT_EQ(print_query(minimize(m)), print_query(m));
    ASSERT_EQ(m.head(), x.head());
  }
}

TEST_F(ContainmentProperties, ReflexiveAndTransitive) {
  for (int i = 0; i < 300; ++i) {
    auto [a, b] = random_pair();
    auto c = specialize(a, rng, schema);
    ASSERT_TRUE(is_contained(a, a));
    ASSERT_TRUE(is_diagonally_contained(a, a));
    if (is_contained(c, a) && is_contained(a, b)) {
      ASSERT_TRUE(is_contained(c, b));
    }
    if (is_contained(a, b)) {
      ASSERT_TRUE(is_diagonally_contained(a, b));
    }
  }
}

TEST_F(ContainmentProperties, CanonicalKeyMatchesEquivalence) {
  for (int i = 0; i < 400; ++i) {
    auto [a, b] = random_pair();
    ASSERT_EQ(canonical_key(a, false), canonical_key(scramble(a, rng), false));
    if (canonical_key(a, false) == canonical_key(b, false)) {
      ASSERT_TRUE(is_equivalent(a, b));
    }
    if (is_equivalent(a, b)) {
      ASSERT_EQ(canonical_key(a, false), canonical_key(b, false));
    }
  }
}

TEST_F(ContainmentProperties, SymbolicQueriesAgreeWithCanonicalDatabase) {
  int positives = 0;
  for (int i = 0; i < 600; ++i) {
    auto [q1, q2] = random_pair();
    // turn one non-head variable of each side into a symbolic constant
    auto symbolize = [&](const Query& x) {
      for (int v : x.variables())
        if (std::find(x.head().begin(), x.head().end(), v) == x.head().end())
          return substitute(x, {{Term::var(v), Term::symbol(0)}}, x.head());
      return x;
    };
    if (i % 2) q2 = symbolize(q2);
    if (i % 3 == 0) q1 = symbolize(q1);
    bool expected = oracle::contained_by_canonical_database(q1, q2);
    ASSERT_EQ(is_contained(q1, q2), expected) << print_query(q1) << "  vs  " << print_query(q2);
    positives += expected;
  }
  EXPECT_GT(positives, 50);
}
