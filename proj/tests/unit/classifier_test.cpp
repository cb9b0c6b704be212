#include <algorithm>
#include <chrono>

#include <gtest/gtest.h>

#include "abl/classifier.hpp"
#include "random.hpp"

namespace abl::classify {
namespace {

using testing::Gen;

smtp::Envelope const kEnvelope{"192.0.2.1", "client.test", "a@b.example", {"r@mx.test"}, 0};

// Lowercase both sides, then repeatedly find() past each match.
std::size_t oracle_count(std::string hay, std::string needle)
{
  auto const lower = [](std::string& s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
      return c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    });
  };
  lower(hay);
  lower(needle);
  if (needle.empty())
    return 0;
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size()))
    ++n;
  return n;
}

TEST(KeywordScorer, Examples)
{
  KeywordScorer const lottery({{"lottery", 5.0}}, 5.0);
  auto v = lottery.classify(kEnvelope, "you won the LOTTERY");
  EXPECT_EQ(v.score, 5.0);
  EXPECT_TRUE(v.is_spam);
  EXPECT_EQ(v.reason, "lotteryx1");

  v = lottery.classify(kEnvelope, "");
  EXPECT_EQ(v.score, 0.0);
  EXPECT_FALSE(v.is_spam);

  KeywordScorer const mixed({{"win", 2.0}, {"free", 1.5}}, 5.0);
  v = mixed.classify(kEnvelope, "win win free");
  EXPECT_EQ(v.score, 5.5);
  EXPECT_TRUE(v.is_spam);
  EXPECT_EQ(v.reason, "winx2 freex1");
}

TEST(KeywordScorer, NonOverlappingCount)
{
  EXPECT_EQ(count_occurrences("aaaa", "aa"), 2u);
  EXPECT_EQ(count_occurrences("aaa", "aa"), 1u);
  EXPECT_EQ(count_occurrences("FrEe free", "FREE"), 2u);
  EXPECT_EQ(count_occurrences("x", ""), 0u);
}

TEST(KeywordRules, ParseAndFormat)
{
  auto const rules = parse_keywords("lottery:5, free : 1.5");
  ASSERT_EQ(rules.size(), 2u);
  EXPECT_EQ(rules[1], (KeywordRule{"free", 1.5}));
  EXPECT_EQ(parse_keywords(format_keywords(rules)), rules);
  EXPECT_TRUE(parse_keywords("").empty());
  EXPECT_THROW(parse_keywords("lottery"), std::invalid_argument);
  EXPECT_THROW(parse_keywords("lottery:-1"), std::invalid_argument);
  EXPECT_THROW(parse_keywords(":1"), std::invalid_argument);
}

std::vector<KeywordRule> random_rules(Gen& g)
{
  std::vector<KeywordRule> rules;
  for (auto n = g.uniform(1, 4); n > 0; --n)
    rules.push_back({g.string_from("abAB", 1, 3), static_cast<double>(g.uniform(0, 40)) / 8.0});
  return rules;
}

TEST(KeywordScorerProperty, MatchesBruteForceCounter)
{
  Gen g(3);
  for (int i = 0; i < 3000; ++i) {
    auto const rules = random_rules(g);
    auto const body = g.string_from("abAB \r\n", 0, 60);
    double want = 0;
    for (auto const& r : rules) {
      ASSERT_EQ(count_occurrences(body, r.keyword), oracle_count(body, r.keyword));
      want += r.weight * static_cast<double>(oracle_count(body, r.keyword));
    }
    EXPECT_EQ(KeywordScorer(rules, 1.0).classify(kEnvelope, body).score, want);
  }
}

TEST(KeywordScorerProperty, AppendingNeverDecreasesScore)
{
  Gen g(4);
  for (int i = 0; i < 3000; ++i) {
    KeywordScorer const s(random_rules(g), 1.0);
    auto const body = g.string_from("abAB ", 0, 40);
    auto const extra = g.string_from("abAB ", 0, 20);
    EXPECT_GE(s.classify(kEnvelope, body + extra).score, s.classify(kEnvelope, body).score);
  }
}

TEST(KeywordScorerProperty, ThresholdIsInclusive)
{
  Gen g(5);
  for (int i = 0; i < 3000; ++i) {
    auto const rules = random_rules(g);
    auto const body = g.string_from("abAB ", 0, 40);
    auto const score = KeywordScorer(rules, 1.0).classify(kEnvelope, body).score;
    EXPECT_TRUE(KeywordScorer(rules, score).classify(kEnvelope, body).is_spam);
    EXPECT_EQ(KeywordScorer(rules, score + 0.125).classify(kEnvelope, body).is_spam, false);
    if (score > 0)
      EXPECT_TRUE(KeywordScorer(rules, score - 0.125).classify(kEnvelope, body).is_spam);
  }
}

TEST(KeywordScorerProperty, Deterministic)
{
  Gen g(6);
  for (int i = 0; i < 500; ++i) {
    auto const rules = random_rules(g);
    auto const body = g.string_from("abAB ", 0, 40);
    auto const a = KeywordScorer(rules, 2.0).classify(kEnvelope, body);
    auto const b = KeywordScorer(rules, 2.0).classify(kEnvelope, body);
    EXPECT_EQ(a.score, b.score);
    EXPECT_EQ(a.is_spam, b.is_spam);
    EXPECT_EQ(a.reason, b.reason);
  }
}

HookSpec hook(std::string command, int timeout_ms = 5000)
{
  return {std::move(command), std::chrono::milliseconds(timeout_ms)};
}

TEST(ExternalHook, ReadsScore)
{
  auto const v = classify_external(kEnvelope, "body", hook("echo score=9.9"), 5.0);
  EXPECT_DOUBLE_EQ(v.score, 9.9);
  EXPECT_TRUE(v.is_spam);
}

TEST(ExternalHook, SeesBodyAndEnvelope)
{
  auto const v = classify_external(
      kEnvelope, "lottery lottery\n",
      hook(R"(n=$(grep -o lottery | wc -l); [ "$ABL_CLIENT_IP" = 192.0.2.1 ] && [ "$ABL_HELO" = client.test ] && )"
           R"([ "$ABL_REVERSE_PATH" = a@b.example ] && echo "score=$n")"),
      1.0);
  EXPECT_EQ(v.score, 2.0);
}

TEST(ExternalHook, Failures)
{
  EXPECT_THROW(classify_external(kEnvelope, "", hook("exit 3"), 5.0), HookFailure);
  EXPECT_THROW(classify_external(kEnvelope, "", hook("echo nonsense"), 5.0), HookFailure);
  EXPECT_THROW(classify_external(kEnvelope, "", hook("echo score=-1"), 5.0), HookFailure);
  auto const started = std::chrono::steady_clock::now();
  EXPECT_THROW(classify_external(kEnvelope, "", hook("sleep 5", 200), 5.0), HookFailure);
  EXPECT_LT(std::chrono::steady_clock::now() - started, std::chrono::seconds(3));
}

TEST(ExternalHook, IgnoresUnreadBody)
{
  // The hook exits without reading a large body; the write side must not die of SIGPIPE.
  auto const v = classify_external(kEnvelope, std::string(1 << 20, 'x'), hook("echo score=1"), 5.0);
  EXPECT_EQ(v.score, 1.0);
}

TEST(Classifier, FailsOpen)
{
  ClassifierConfig cfg;
  cfg.keywords = {{"lottery", 5.0}};
  cfg.hook = hook("exit 1");
  Classifier const c(cfg);
  auto const v = c.classify(kEnvelope, "lottery");
  EXPECT_FALSE(v.is_spam);

  cfg.hook.reset();
  EXPECT_TRUE(Classifier(cfg).classify(kEnvelope, "lottery").is_spam);
}

}  // namespace
}  // namespace abl::classify
