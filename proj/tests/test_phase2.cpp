#include <gtest/gtest.h>

#include "cqmine/eval.hpp"
#include "cqmine/phase2.hpp"
#include "fixtures.hpp"
#include "oracle.hpp"

using namespace cqmine;
using cqmine::fixture::beer;
using cqmine::fixture::q;

namespace {

MinerConfig beer_config(std::size_t max_atoms = 2) {
  MinerConfig cfg;
  cfg.minsup = 2;
  cfg.max_atoms = max_atoms;
  return cfg;
}

const MinerState& beer_state() {
  static const MinerState s = run_phase1(beer(), beer_config());
  return s;
}

const std::vector<AssociationRule>& beer_rules(double minconf) {
  static std::map<double, std::vector<AssociationRule>> cache;
  auto it = cache.find(minconf);
  if (it == cache.end()) {
    RuleConfig rc;
    rc.minconf = minconf;
    it = cache.emplace(minconf, run_phase2(beer_state(), beer(), beer_config(), rc)).first;
  }
  return it->second;
}

const AssociationRule* find_rule(const std::vector<AssociationRule>& rules, const Query& a, const Query& c) {
  const auto key = rule_key(a, c);
  for (const auto& r : rules)
    if (rule_key(r.antecedent, r.consequent) == key) return &r;
  return nullptr;
}

bool has(const std::vector<Query>& qs, const Query& x) {
  for (const auto& y : qs)
    if (canonical_key(y, false) == canonical_key(x, false)) return true;
  return false;
}

}  // namespace

TEST(Confidence, ThresholdIsInclusive) {
  EXPECT_TRUE(is_confident(3, 3, 1.0));
  EXPECT_TRUE(is_confident(1, 2, 0.5));
  EXPECT_FALSE(is_confident(2, 5, 0.5));
  EXPECT_TRUE(is_confident(1, 3, 1.0 / 3.0));
}

TEST(RuleConfig, Validation) {
  RuleConfig rc;
  rc.minconf = 0.0;
  EXPECT_THROW(rc.validate(), ConfigError);
  rc.minconf = 1.5;
  EXPECT_THROW(rc.validate(), ConfigError);
  rc.minconf = 1.0;
  EXPECT_NO_THROW(rc.validate());
}

TEST(AntecedentGeneralizations, InverseSelection) {
  auto g = antecedent_generalizations(q("Q(x1) :- likes(x1,'Duvel')."), beer_config());
  EXPECT_TRUE(has(g, q("Q(x1) :- likes(x1,x2).")));
}

TEST(AntecedentGeneralizations, HeadNeverGrows) {
  for (const char* text : {"Q(x1) :- likes(x1,'Duvel').", "Q(x,y) :- likes(x,y), visits(x,'Cheers').",
                           "Q(x) :- likes(x,y), serves(z,y)."})
    for (const auto& g : antecedent_generalizations(q(text), beer_config())) {
      EXPECT_EQ(g.head().size(), q(text).head().size());
      EXPECT_TRUE(is_contained(q(text), g)) << text << " / " << render_query(g);
    }
}

TEST(AntecedentGeneralizations, DropsTheExtraAtom) {
  auto g = antecedent_generalizations(q("Q2(x,y) :- likes(x,'Duvel'), visits(x,y), serves(y,'Duvel')."),
                                      beer_config(3));
  EXPECT_TRUE(has(g, q("Q1(x,y) :- likes(x,'Duvel'), visits(x,y).")));
}

TEST(AntecedentGeneralizations, SplitAtomIntoTwoWeakerCopies) {
  auto g = antecedent_generalizations(q("Q(x) :- likes(x,'Duvel')."), beer_config());
  EXPECT_TRUE(has(g, q("Q(x) :- likes(x,y), likes(z,'Duvel').")));
}

TEST(Phase2, LikesImpliesDuvel) {
  auto* r = find_rule(beer_rules(1.0), q("Q(x1) :- likes(x1,x2)."), q("Q(x1) :- likes(x1,'Duvel')."));
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->confidence, 1.0);
  EXPECT_EQ(r->support, 3u);
  EXPECT_EQ(r->antecedent_support, 3u);
}

TEST(Phase2, DuvelDrinkerRule) {
  RuleConfig rc;
  rc.minconf = 0.8;
  Phase2Miner miner(beer(), beer_config(3), rc);
  auto consequent = q("Q(x,y) :- likes(x,'Duvel'), visits(x,y), serves(y,'Duvel').");
  ASSERT_EQ(support(consequent, beer()), 5u);
  auto rules = miner.rules_for(consequent, 5);
  auto* r = find_rule(rules, q("Q(x,y) :- likes(x,'Duvel'), visits(x,y)."), consequent);
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->antecedent_support, 6u);
  EXPECT_DOUBLE_EQ(r->confidence, 5.0 / 6.0);
}

TEST(Phase2, TrivialRulesOnlyOnRequest) {
  for (const auto& r : beer_rules(1.0)) ASSERT_NE(canonical_key(r.antecedent, false), canonical_key(r.consequent, false));
  RuleConfig rc;
  rc.include_trivial = true;
  Phase2Miner miner(beer(), beer_config(), rc);
  auto rules = miner.rules_for(q("Q(x1) :- likes(x1,'Duvel')."), 3);
  ASSERT_FALSE(rules.empty());
  EXPECT_EQ(rules.front().antecedent_text, rules.front().consequent_text);
}

TEST(Phase2, RulesAreSound) {
  for (double minconf : {1.0, 0.5})
    for (const auto& r : beer_rules(minconf)) {
      ASSERT_TRUE(is_contained(r.consequent, r.antecedent)) << r.antecedent_text << " => " << r.consequent_text;
      ASSERT_EQ(support(r.consequent, beer()), r.support);
      ASSERT_EQ(support(r.antecedent, beer()), r.antecedent_support);
      ASSERT_GE(r.support, 2u);
      ASSERT_TRUE(is_confident(r.support, r.antecedent_support, minconf));
    }
}

TEST(Phase2, ConfidenceDecreasesUpTheAntecedents) {
  std::map<std::string, std::vector<const AssociationRule*>> by_consequent;
  for (const auto& r : beer_rules(0.5)) by_consequent[canonical_key(r.consequent, false)].push_back(&r);
  std::size_t pairs = 0;
  for (const auto& [key, rules] : by_consequent) {
    if (rules.size() > 40) continue;  // keep the quadratic check cheap
    for (const auto* a : rules)
      for (const auto* b : rules)
        if (a != b && is_contained(a->antecedent, b->antecedent)) {
          ++pairs;
          ASSERT_LE(b->confidence, a->confidence) << a->antecedent_text << " / " << b->antecedent_text;
        }
  }
  EXPECT_GT(pairs, 0u);
}

TEST(Phase2, NoDuplicateRules) {
  std::set<std::string> seen;
  for (const auto& r : beer_rules(0.5)) ASSERT_TRUE(seen.insert(rule_key(r.antecedent, r.consequent)).second);
}

TEST(Phase2, SortedByConfidenceThenText) {
  const auto& rules = beer_rules(0.5);
  for (std::size_t i = 1; i < rules.size(); ++i) ASSERT_GE(rules[i - 1].confidence, rules[i].confidence);
}

TEST(Phase2, MatchesOracle) {
  auto frequent = oracle::frequent_queries(beer(), 2);
  for (double minconf : {1.0, 0.5}) {
    std::set<std::string> mined, expected;
    for (const auto& r : beer_rules(minconf)) mined.insert(rule_key(r.antecedent, r.consequent));
    for (const auto& [key, sup] : oracle::rules(frequent, minconf)) expected.insert(key);
    EXPECT_EQ(mined, expected) << "minconf " << minconf;
  }
}

TEST(Phase2, ParallelRunIsIdentical) {
  RuleConfig rc;
  rc.minconf = 0.5;
  rc.jobs = 4;
  auto rules = run_phase2(beer_state(), beer(), beer_config(), rc);
  ASSERT_EQ(rules.size(), beer_rules(0.5).size());
  for (std::size_t i = 0; i < rules.size(); ++i) {
    EXPECT_EQ(rules[i].antecedent_text, beer_rules(0.5)[i].antecedent_text);
    EXPECT_EQ(rules[i].consequent_text, beer_rules(0.5)[i].consequent_text);
  }
}
