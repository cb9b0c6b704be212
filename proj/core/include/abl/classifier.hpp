#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "abl/smtp/session.hpp"

namespace abl::classify {

struct ClassifierVerdict {
  double score = 0.0;
  bool is_spam = false;
  std::string reason;
};

struct KeywordRule {
  std::string keyword;
  double weight = 0.0;
  bool operator==(KeywordRule const&) const = default;
};

// "lottery:5.0,free:1.5". Throws std::invalid_argument.
std::vector<KeywordRule> parse_keywords(std::string_view text);
std::string format_keywords(std::vector<KeywordRule> const& rules);

// Case-insensitive (ASCII), non-overlapping, left to right.
std::size_t count_occurrences(std::string_view haystack, std::string_view needle) noexcept;

// score = sum(weight * occurrences); spam iff score >= threshold.
class KeywordScorer {
public:
  KeywordScorer(std::vector<KeywordRule> rules, double threshold);

  ClassifierVerdict classify(smtp::Envelope const& envelope, std::string_view body) const;

  std::vector<KeywordRule> const& rules() const noexcept { return rules_; }
  double threshold() const noexcept { return threshold_; }

private:
  std::vector<KeywordRule> rules_;
  double threshold_;
};

class HookFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct HookSpec {
  std::string command;  // run through /bin/sh -c
  std::chrono::milliseconds timeout{5000};
};

// Runs the hook with the body on stdin and expects `score=<decimal>` on
// stdout and exit status 0. The envelope is exported as ABL_CLIENT_IP,
// ABL_HELO and ABL_REVERSE_PATH. Throws HookFailure.
ClassifierVerdict classify_external(smtp::Envelope const& envelope, std::string_view body,
                                    HookSpec const& hook, double threshold);

struct ClassifierConfig {
  std::vector<KeywordRule> keywords;
  double threshold = 5.0;
  std::optional<HookSpec> hook;
};

// Front end used by the server: the external hook when configured, the
// keyword scorer otherwise. Never throws; a failing hook yields not-spam.
class Classifier {
public:
  explicit Classifier(ClassifierConfig config);

  ClassifierVerdict classify(smtp::Envelope const& envelope, std::string_view body) const;

  ClassifierConfig const& config() const noexcept { return config_; }

private:
  ClassifierConfig config_;
  KeywordScorer scorer_;
};

}  // namespace abl::classify
