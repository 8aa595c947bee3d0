#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "ideaforge/evaluator.hpp"
#include "test_support.hpp"

using namespace ideaforge;
using namespace ideaforge::eval;

namespace {

std::string words(std::size_t from, std::size_t count, const std::string& stem = "w") {
  std::string s;
  for (std::size_t i = 0; i < count; ++i) s += (i ? " " : "") + stem + std::to_string(from + i);
  return s;
}

ConceptCandidate scored(std::string id, double novelty, double relevance, std::size_t len, bool rep = false) {
  ConceptCandidate c;
  c.id = std::move(id);
  EvaluationReport r;
  r.novelty = novelty;
  r.relevance = relevance;
  r.token_count = len;
  r.repetition_flag = rep;
  r.length_ok = len >= 30 && len <= 400;
  r.novelty_ok = novelty >= 0.3;
  r.composite = (r.length_ok && r.novelty_ok && !rep) ? 0.5 * novelty + 0.5 * relevance : 0.0;
  c.scores = r;
  return c;
}

}  // namespace

TEST_SUITE("evaluator") {
  TEST_CASE("ngram_set and jaccard") {
    CHECK(ngram_set("a b a b", 2) == std::set<NGram>{{"a", "b"}, {"b", "a"}});
    CHECK(ngram_set("a b", 3).empty());
    CHECK(jaccard({}, {}) == 0.0);
    CHECK(jaccard(ngram_set("a b c", 1), ngram_set("b c d", 1)) == doctest::Approx(0.5));
  }

  TEST_CASE("novelty extremes and a hand-computed overlap") {
    const std::string ref = words(0, 12);
    const std::vector<std::string> refs{ref};
    CHECK(novelty_score(ref, refs) == 0.0);
    CHECK(novelty_score(words(100, 12), refs) == 1.0);
    CHECK(novelty_score("too short", refs) == 0.0);
    CHECK(novelty_score(words(0, 12), std::vector<std::string>{}) == 1.0);

    // First six reference words then six fresh ones: 3 shared 4-grams of 9 + 9 - 3.
    const auto half = words(0, 6) + " " + words(50, 6);
    CHECK(novelty_score(half, refs) == doctest::Approx(1.0 - 3.0 / 15.0));
  }

  TEST_CASE("novelty never increases when references are added") {
    std::mt19937 rng(8);
    std::uniform_int_distribution<int> w(0, 6);
    auto sentence = [&] {
      std::string s;
      for (int i = 0; i < 15; ++i) s += "t" + std::to_string(w(rng)) + " ";
      return s;
    };
    for (int trial = 0; trial < 200; ++trial) {
      const auto cand = sentence();
      std::vector<std::string> refs{sentence()};
      const double before = novelty_score(cand, refs);
      refs.push_back(sentence());
      REQUIRE(novelty_score(cand, refs) <= before);
    }
  }

  TEST_CASE("repetition flag") {
    CHECK(repetition_flag("a b c d a b c d a b c d"));
    CHECK_FALSE(repetition_flag("a b c d a b c d"));
    CHECK_FALSE(repetition_flag(words(0, 50)));
    CHECK(repetition_flag("The Lamp Is On. the lamp is on. THE LAMP IS ON."));
  }

  TEST_CASE("distinct_n") {
    const std::vector<std::string> t{"a", "b", "a", "b"};
    CHECK(distinct_n(t, 2) == doctest::Approx(2.0 / 3.0));
    CHECK(distinct_n(t, 5) == 0.0);
  }

  TEST_CASE("relevance is a content-word cosine") {
    CHECK(content_words("The lamp is on the desk.") == std::vector<std::string>{"lamp", "desk"});
    CHECK(relevance_score("lamp lamp desk", "lamp desk desk") == doctest::Approx(4.0 / 5.0));
    CHECK(relevance_score("the of and", "lamp") == 0.0);
    CHECK(relevance_score("folding drone", "Folding drone!") == doctest::Approx(1.0));
    CHECK(relevance_score("folding drone", "kettle") == 0.0);
  }

  TEST_CASE("evaluate combines the gates") {
    EvaluationContext ctx;
    ctx.anchor = "drone lantern light";
    ctx.references = {words(0, 40)};
    const auto good = "drone light " + words(200, 30);
    auto r = evaluate(good, ctx);
    CHECK(r.token_count == 32);
    CHECK(r.length_ok);
    CHECK(r.novelty == 1.0);
    CHECK(r.novelty_ok);
    CHECK_FALSE(r.repetition_flag);
    CHECK(r.composite == doctest::Approx(0.5 * r.novelty + 0.5 * r.relevance));
    CHECK(r.relevance > 0.0);

    r = evaluate("drone light", ctx);
    CHECK_FALSE(r.length_ok);
    CHECK(r.composite == 0.0);

    r = evaluate(words(0, 40), ctx);
    CHECK_FALSE(r.novelty_ok);
    CHECK(r.composite == 0.0);

    Thresholds bad;
    bad.novelty_weight = 0.7;
    ctx.thresholds = bad;
    CHECK_THROWS_AS(evaluate(good, ctx), ValidationError);
  }

  TEST_CASE("rank_and_filter matches a sort-and-filter oracle") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> len(10, 450);
    std::vector<ConceptCandidate> pool;
    for (int i = 0; i < 300; ++i) {
      // Coarse values force ties.
      const double nov = std::round(u(rng) * 4) / 4;
      const double rel = std::round(u(rng) * 4) / 4;
      pool.push_back(scored("c" + std::to_string(1000 + (i * 37) % 300), nov, rel, len(rng), u(rng) < 0.1));
    }
    const auto ranked = rank_and_filter(pool);

    std::vector<ConceptCandidate> expect;
    for (const auto& c : pool) {
      const auto& s = *c.scores;
      if (!s.repetition_flag && s.token_count >= 30 && s.token_count <= 400 && s.novelty >= 0.3) expect.push_back(c);
    }
    std::sort(expect.begin(), expect.end(), [](const auto& a, const auto& b) {
      if (a.scores->composite != b.scores->composite) return a.scores->composite > b.scores->composite;
      return a.id < b.id;
    });
    REQUIRE(ranked.size() == expect.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) REQUIRE(ranked[i].id == expect[i].id);
    CHECK(rank_and_filter(ranked) == ranked);

    std::vector<ConceptCandidate> unscored{ConceptCandidate{}};
    CHECK_THROWS_AS(rank_and_filter(unscored), ValidationError);
  }

  TEST_CASE("mode and verdict strings") {
    for (auto m : {Mode::problem_driven, Mode::analogy}) CHECK(parse_mode(to_string(m)) == m);
    for (auto v : {Verdict::pending, Verdict::accepted, Verdict::rejected}) CHECK(parse_verdict(to_string(v)) == v);
    CHECK_FALSE(parse_mode("poetry").has_value());
  }
}
