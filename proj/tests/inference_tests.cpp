#include <algorithm>
#include <map>
#include <set>

#include "calibench/errors.hpp"
#include "calibench/inference.hpp"
#include "calibench/kb.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace calibench;

namespace {

KnowledgeBase demo_kb() {
  KnowledgeBase kb;
  PredicateMeta locate;
  locate.name = "locate_in";
  locate.transitive = true;
  kb.register_predicate(locate);
  PredicateMeta influenced;
  influenced.name = "influence_by";
  influenced.inverse_form = "influence";
  kb.register_predicate(influenced);
  PredicateMeta not_win;
  not_win.name = "did_not_win";
  not_win.negation_form = "won";
  kb.register_predicate(not_win);
  PredicateMeta different;
  different.name = "different_from";
  different.symmetric = true;
  kb.register_predicate(different);
  return kb;
}

const DerivedFact* find_fact(const Closure& c, const KnowledgeTriple& t, bool truth) {
  for (const auto& f : c.facts) {
    if (f.triple == t && f.truth == truth) return &f;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("reasoning types parse and print round-trip") {
  for (ReasoningType t : {ReasoningType::Negation, ReasoningType::Symmetric,
                          ReasoningType::Inverse, ReasoningType::Transitive,
                          ReasoningType::Composite, ReasoningType::Temporal}) {
    auto parsed = parse_reasoning_type(to_string(t));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == t);
  }
  CHECK_FALSE(parse_reasoning_type("Wild").has_value());
}

TEST_CASE("negation rule emits the positive form as false") {
  KnowledgeBase kb = demo_kb();
  KnowledgeTriple base{"Haruki Murakami", "did_not_win",
                       "the Nobel Prize in Literature in 2016", Domain::Culture};
  auto derived = apply_negation(kb, base_fact(base));
  REQUIRE(derived.has_value());
  CHECK(derived->triple ==
        KnowledgeTriple{"Haruki Murakami", "won", "the Nobel Prize in Literature in 2016",
                        Domain::Culture});
  CHECK_FALSE(derived->truth);
  CHECK(derived->type == ReasoningType::Negation);
  CHECK(derived->depth == 1);
  REQUIRE(derived->provenance.size() == 1);
  CHECK(derived->provenance[0].rule == "negation");
  CHECK(derived->provenance[0].inputs == std::vector<KnowledgeTriple>{base});
  CHECK(derived->evidence == std::vector<KnowledgeTriple>{base});
  // Predicates without a negation form do not fire the rule.
  CHECK_FALSE(apply_negation(kb, base_fact({"a", "locate_in", "b", Domain::Culture})));
  // False premises never fire.
  CHECK_FALSE(apply_negation(kb, *derived).has_value());
}

TEST_CASE("symmetric rule swaps subject and object") {
  KnowledgeBase kb = demo_kb();
  KnowledgeTriple base{"Haruki Murakami", "different_from", "Haruki Uemura", Domain::People};
  auto derived = apply_symmetric(kb, base_fact(base));
  REQUIRE(derived.has_value());
  CHECK(derived->triple ==
        KnowledgeTriple{"Haruki Uemura", "different_from", "Haruki Murakami", Domain::People});
  CHECK(derived->truth);
  CHECK(derived->type == ReasoningType::Symmetric);
  CHECK_FALSE(apply_symmetric(kb, base_fact({"a", "did_not_win", "b", Domain::People})));
}

TEST_CASE("inverse rule renames the predicate and flips direction") {
  KnowledgeBase kb = demo_kb();
  KnowledgeTriple base{"Haruki Murakami", "influence_by", "Richard Brautigan", Domain::Culture};
  auto derived = apply_inverse(kb, base_fact(base));
  REQUIRE(derived.has_value());
  CHECK(derived->triple ==
        KnowledgeTriple{"Richard Brautigan", "influence", "Haruki Murakami", Domain::Culture});
  CHECK(derived->truth);
  CHECK(derived->type == ReasoningType::Inverse);
}

TEST_CASE("transitive rule chains matching predicates and keeps the left domain") {
  KnowledgeBase kb = demo_kb();
  DerivedFact lhs = base_fact({"Haruki Murakami", "locate_in", "Kyoto", Domain::Geography});
  DerivedFact rhs = base_fact({"Kyoto", "locate_in", "Japan", Domain::Geography});
  auto derived = apply_transitive(kb, lhs, rhs);
  REQUIRE(derived.has_value());
  CHECK(derived->triple ==
        KnowledgeTriple{"Haruki Murakami", "locate_in", "Japan", Domain::Geography});
  CHECK(derived->type == ReasoningType::Transitive);
  CHECK(derived->depth == 1);
  CHECK(derived->evidence.size() == 2);
  // Mismatched join point or predicate yields nothing.
  CHECK_FALSE(apply_transitive(kb, rhs, lhs).has_value());
  CHECK_FALSE(apply_transitive(kb, lhs, base_fact({"Kyoto", "different_from", "x",
                                                   Domain::Geography})));
  // Non-transitive predicates never join.
  DerivedFact a = base_fact({"x", "influence_by", "y", Domain::Culture});
  DerivedFact b = base_fact({"y", "influence_by", "z", Domain::Culture});
  CHECK_FALSE(apply_transitive(kb, a, b).has_value());
}

TEST_CASE("closure derives the four canonical single-rule examples exactly") {
  KnowledgeBase kb = demo_kb();
  kb.add({"Haruki Murakami", "influence_by", "Richard Brautigan", Domain::Culture});
  kb.add({"Haruki Murakami", "did_not_win", "the Nobel Prize in Literature in 2016",
          Domain::Culture});
  kb.add({"Haruki Murakami", "locate_in", "Kyoto", Domain::Geography});
  kb.add({"Kyoto", "locate_in", "Japan", Domain::Geography});
  kb.add({"Haruki Murakami", "different_from", "Haruki Uemura", Domain::People});

  Closure c = close(kb, {.max_composite_depth = 1});
  CHECK(c.report.base_count == 5);
  REQUIRE(c.facts.size() == 4);

  const DerivedFact* neg = find_fact(
      c, {"Haruki Murakami", "won", "the Nobel Prize in Literature in 2016", Domain::Culture},
      false);
  REQUIRE(neg != nullptr);
  CHECK(neg->type == ReasoningType::Negation);

  const DerivedFact* inv =
      find_fact(c, {"Richard Brautigan", "influence", "Haruki Murakami", Domain::Culture}, true);
  REQUIRE(inv != nullptr);
  CHECK(inv->type == ReasoningType::Inverse);

  const DerivedFact* tra =
      find_fact(c, {"Haruki Murakami", "locate_in", "Japan", Domain::Geography}, true);
  REQUIRE(tra != nullptr);
  CHECK(tra->type == ReasoningType::Transitive);

  const DerivedFact* sym =
      find_fact(c, {"Haruki Uemura", "different_from", "Haruki Murakami", Domain::People}, true);
  REQUIRE(sym != nullptr);
  CHECK(sym->type == ReasoningType::Symmetric);

  CHECK(c.report.counts.at(ReasoningType::Negation) == 1);
  CHECK(c.report.counts.at(ReasoningType::Inverse) == 1);
  CHECK(c.report.counts.at(ReasoningType::Transitive) == 1);
  CHECK(c.report.counts.at(ReasoningType::Symmetric) == 1);
}

TEST_CASE("closure keeps minimal depths and never re-derives base facts") {
  // a->b->c->d chain: spans at depth 1 (length 2) and depth 2 (length 3),
  // and the full span a->d at depth 2 via (depth1, depth0) or (depth0, depth1)
  // joins — never the redundant depth-3 derivation.
  KnowledgeBase kb;
  PredicateMeta p;
  p.name = "p";
  p.transitive = true;
  kb.register_predicate(p);
  kb.add({"a", "p", "b", Domain::Math});
  kb.add({"b", "p", "c", Domain::Math});
  kb.add({"c", "p", "d", Domain::Math});

  Closure c = close(kb, {.max_composite_depth = 5});
  REQUIRE(c.facts.size() == 3);
  const DerivedFact* ac = find_fact(c, {"a", "p", "c", Domain::Math}, true);
  const DerivedFact* bd = find_fact(c, {"b", "p", "d", Domain::Math}, true);
  const DerivedFact* ad = find_fact(c, {"a", "p", "d", Domain::Math}, true);
  REQUIRE(ac);
  REQUIRE(bd);
  REQUIRE(ad);
  CHECK(ac->depth == 1);
  CHECK(bd->depth == 1);
  CHECK(ad->depth == 2);
  CHECK(ad->type == ReasoningType::Composite);  // two rule steps
  CHECK(ad->provenance.size() == 2);
  // Evidence lists the base premises the derivation rests on, in first-use
  // order without duplicates.
  CHECK(ad->evidence.size() == 3);
  CHECK_FALSE(c.report.truncated);
  CHECK(c.report.iterations == 2);
  // No candidate may reproduce a base triple: closing a second time over the
  // same kb plus its closure facts as imported changes nothing.
  CHECK(find_fact(c, {"a", "p", "b", Domain::Math}, true) == nullptr);
}

TEST_CASE("closure depth equals provenance length and facts sort canonically") {
  auto rkb = support::make_random_kb(99);
  Closure c = close(rkb.kb, {.max_composite_depth = rkb.max_depth}, rkb.imported);
  for (const auto& f : c.facts) {
    CHECK(f.depth == static_cast<int>(f.provenance.size()));
  }
  for (std::size_t i = 1; i < c.facts.size(); ++i) {
    const auto& a = c.facts[i - 1];
    const auto& b = c.facts[i];
    auto ka = std::tie(a.depth, a.triple.subject, a.triple.predicate, a.triple.object);
    auto kb2 = std::tie(b.depth, b.triple.subject, b.triple.predicate, b.triple.object);
    CHECK(ka <= kb2);
  }
}

TEST_CASE("tie-break between equal-depth derivations picks the smaller rule sequence") {
  // Both (b,q,a) routes have depth 1: inverse of (a,p,b) and symmetric of
  // (b,q,a)? Construct: p has inverse_form q; q is symmetric; base facts
  // (a,p,b) and (a,q,b). Then (b,q,a) derives at depth 1 via inverse(a,p,b)
  // and via symmetric(a,q,b). "inverse" < "symmetric" lexicographically.
  KnowledgeBase kb;
  PredicateMeta p;
  p.name = "p";
  p.inverse_form = "q";
  kb.register_predicate(p);
  PredicateMeta q;
  q.name = "q";
  q.symmetric = true;
  kb.register_predicate(q);
  kb.add({"a", "p", "b", Domain::Math});
  kb.add({"a", "q", "b", Domain::Math});

  Closure c = close(kb, {.max_composite_depth = 1});
  const DerivedFact* f = find_fact(c, {"b", "q", "a", Domain::Math}, true);
  REQUIRE(f != nullptr);
  CHECK(f->rule_names() == std::vector<std::string>{"inverse"});
}

TEST_CASE("imported facts join the output and true ones serve as premises") {
  KnowledgeBase kb;
  PredicateMeta p;
  p.name = "p";
  p.transitive = true;
  kb.register_predicate(p);
  kb.add({"a", "p", "b", Domain::History});

  DerivedFact true_imported;
  true_imported.triple = {"b", "p", "c", Domain::History};
  true_imported.truth = true;
  true_imported.type = ReasoningType::Temporal;
  true_imported.evidence = {true_imported.triple};

  DerivedFact false_imported;
  false_imported.triple = {"x", "p", "y", Domain::History};
  false_imported.truth = false;
  false_imported.type = ReasoningType::Temporal;

  DerivedFact dup_of_base;  // silently dropped: the base triple wins
  dup_of_base.triple = {"a", "p", "b", Domain::History};
  dup_of_base.truth = true;

  Closure c = close(kb, {.max_composite_depth = 3},
                    {true_imported, false_imported, dup_of_base});
  // Output: the two kept imported facts plus the join a->c built on one.
  CHECK(c.facts.size() == 3);
  const DerivedFact* joined = find_fact(c, {"a", "p", "c", Domain::History}, true);
  REQUIRE(joined != nullptr);
  CHECK(joined->depth == 1);
  const DerivedFact* kept = find_fact(c, {"b", "p", "c", Domain::History}, true);
  REQUIRE(kept != nullptr);
  CHECK(kept->depth == 0);
  // The false import is terminal: no joins through it.
  CHECK(find_fact(c, {"x", "p", "y", Domain::History}, false) != nullptr);
  CHECK(find_fact(c, {"a", "p", "b", Domain::History}, true) == nullptr);
  CHECK(c.report.counts.at(ReasoningType::Temporal) == 2);
}

TEST_CASE("duplicate imported facts keep the first copy") {
  KnowledgeBase kb;
  kb.register_predicate(PredicateMeta{.name = "p"});
  DerivedFact first;
  first.triple = {"a", "p", "b", Domain::Math};
  first.truth = true;
  first.evidence = {{"marker-first", "p", "x", Domain::Math}};
  DerivedFact second = first;
  second.evidence = {{"marker-second", "p", "x", Domain::Math}};
  Closure c = close(kb, {}, {first, second});
  REQUIRE(c.facts.size() == 1);
  CHECK(c.facts[0].evidence[0].subject == "marker-first");
}

TEST_CASE("transitive joins can leapfrog an empty depth level") {
  // Regression fixture for the plateau bug: (a,q,b),(b,q,c) with
  // q.inverse_form = s, s symmetric with inverse_form p, p transitive.
  // Depth 4 produces nothing, yet depths 5-7 hold p-chain joins.
  KnowledgeBase kb;
  PredicateMeta q;
  q.name = "q";
  q.inverse_form = "s";
  kb.register_predicate(q);
  PredicateMeta s;
  s.name = "s";
  s.symmetric = true;
  s.inverse_form = "p";
  kb.register_predicate(s);
  PredicateMeta p;
  p.name = "p";
  p.transitive = true;
  kb.register_predicate(p);
  kb.add({"a", "q", "b", Domain::Math});
  kb.add({"b", "q", "c", Domain::Math});

  struct Expect {
    int cap;
    std::size_t facts;
    bool truncated;
    std::size_t iterations;
  };
  for (Expect e : {Expect{3, 8, true, 3}, Expect{4, 8, true, 3}, Expect{5, 9, true, 5},
                   Expect{6, 12, true, 6}, Expect{7, 13, false, 7}}) {
    CAPTURE(e.cap);
    Closure c = close(kb, {.max_composite_depth = e.cap});
    CHECK(c.facts.size() == e.facts);
    CHECK(c.report.truncated == e.truncated);
    CHECK(c.report.iterations == e.iterations);
  }
  // The p-chain span lands at depth 5 by joining two depth-2 facts.
  Closure c7 = close(kb, {.max_composite_depth = 7});
  const DerivedFact* span = find_fact(c7, {"a", "p", "c", Domain::Math}, true);
  REQUIRE(span != nullptr);
  CHECK(span->depth == 5);

  // The oracle agrees level by level.
  auto oracle = support::naive_closure(kb, {}, 7);
  CHECK(oracle.size() == c7.facts.size());
  for (const auto& f : c7.facts) {
    auto it = oracle.find(support::key_of(f));
    REQUIRE(it != oracle.end());
    CHECK(it->second == f.depth);
  }
}

TEST_CASE("max_iterations caps expansion rounds independently of depth") {
  KnowledgeBase kb;
  PredicateMeta p;
  p.name = "p";
  p.transitive = true;
  kb.register_predicate(p);
  for (char ch = 'a'; ch < 'f'; ++ch) {
    kb.add({std::string(1, ch), "p", std::string(1, ch + 1), Domain::Math});
  }
  Closure capped = close(kb, {.max_composite_depth = 10, .max_iterations = 1});
  CHECK(capped.report.iterations == 1);
  CHECK(capped.report.truncated);
  for (const auto& f : capped.facts) CHECK(f.depth <= 1);
  Closure uncapped = close(kb, {.max_composite_depth = 10, .max_iterations = 0});
  CHECK(uncapped.facts.size() > capped.facts.size());
  CHECK_FALSE(uncapped.report.truncated);
}

TEST_CASE("closure is deterministic") {
  auto rkb = support::make_random_kb(7);
  Closure a = close(rkb.kb, {.max_composite_depth = rkb.max_depth}, rkb.imported);
  Closure b = close(rkb.kb, {.max_composite_depth = rkb.max_depth}, rkb.imported);
  REQUIRE(a.facts.size() == b.facts.size());
  for (std::size_t i = 0; i < a.facts.size(); ++i) {
    CHECK(a.facts[i].triple == b.facts[i].triple);
    CHECK(a.facts[i].truth == b.facts[i].truth);
    CHECK(a.facts[i].depth == b.facts[i].depth);
    CHECK(a.facts[i].rule_names() == b.facts[i].rule_names());
  }
}

TEST_CASE("closure matches the fixed-point oracle on randomized knowledge bases") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    CAPTURE(seed);
    auto rkb = support::make_random_kb(seed);
    Closure c = close(rkb.kb, {.max_composite_depth = rkb.max_depth}, rkb.imported);
    auto oracle = support::naive_closure(rkb.kb, rkb.imported, rkb.max_depth);
    REQUIRE(c.facts.size() == oracle.size());
    for (const auto& f : c.facts) {
      auto it = oracle.find(support::key_of(f));
      REQUIRE_MESSAGE(it != oracle.end(), "unexpected fact in closure");
      CHECK(it->second == f.depth);
    }
    CHECK(c.report.truncated ==
          support::naive_truncated(rkb.kb, rkb.imported, rkb.max_depth));
  }
}

TEST_CASE("closure rejects nothing but reports truncation at tight caps") {
  KnowledgeBase kb;
  PredicateMeta p;
  p.name = "p";
  p.transitive = true;
  kb.register_predicate(p);
  kb.add({"a", "p", "b", Domain::Math});
  kb.add({"b", "p", "c", Domain::Math});
  kb.add({"c", "p", "d", Domain::Math});
  kb.add({"d", "p", "e", Domain::Math});

  Closure tight = close(kb, {.max_composite_depth = 1});
  CHECK(tight.report.truncated);  // a->d needs two steps, a->e three
  Closure full = close(kb, {.max_composite_depth = 3});
  CHECK_FALSE(full.report.truncated);
  CHECK(full.facts.size() == 6);
}

TEST_CASE("closure save/load round-trips derived facts") {
  support::TempDir dir("closure-io");
  KnowledgeBase kb = demo_kb();
  kb.add({"Haruki Murakami", "locate_in", "Kyoto", Domain::Geography});
  kb.add({"Kyoto", "locate_in", "Japan", Domain::Geography});
  Closure c = close(kb, {.max_composite_depth = 2});
  save_closure(c, dir.file("closure.jsonl"), "feedc0defeedc0defeedc0defeedc0de");
  auto loaded = load_derived_facts(dir.file("closure.jsonl"));
  REQUIRE(loaded.size() == c.facts.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].triple == c.facts[i].triple);
    CHECK(loaded[i].truth == c.facts[i].truth);
    CHECK(loaded[i].type == c.facts[i].type);
    CHECK(loaded[i].depth == c.facts[i].depth);
    CHECK(loaded[i].evidence == c.facts[i].evidence);
  }
  CHECK_THROWS_AS(load_derived_facts(dir.file("absent.jsonl")), DataError);
}
