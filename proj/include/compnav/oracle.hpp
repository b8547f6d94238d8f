#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "compnav/geometry.hpp"
#include "compnav/world.hpp"

namespace compnav {

struct VerdictLogits {
  double entail = 0.0;
  double neutral = 0.0;
  double contradict = 0.0;

  bool operator==(const VerdictLogits& o) const {
    return entail == o.entail && neutral == o.neutral && contradict == o.contradict;
  }
};

// Built-in structured verifier rule table. Constants chosen so the entail
// score clears tau = 0.9 and the neutral score stays far below it.
inline constexpr VerdictLogits kEntailVerdict{4.0, 0.0, -4.0};
inline constexpr VerdictLogits kContradictVerdict{-4.0, 0.0, 4.0};
inline constexpr VerdictLogits kNeutralVerdict{-2.0, 2.0, -2.0};

// Structured entailment: entail when the exact pair is present, contradict
// when the attribute carries a different value, neutral when absent.
inline VerdictLogits verify(const std::vector<AttributeValue>& description,
                            const AttributeValue& hypothesis) {
  bool key_present = false;
  for (const auto& a : description) {
    if (same_pair(a, hypothesis)) return kEntailVerdict;
    if (a.attribute == hypothesis.attribute) key_present = true;
  }
  return key_present ? kContradictVerdict : kNeutralVerdict;
}

inline bool entails(const std::vector<AttributeValue>& description,
                    const AttributeValue& hypothesis) {
  return verify(description, hypothesis) == kEntailVerdict;
}

struct OracleConfig {
  double error_rate = 0.0;  // probability a binary answer is flipped
  int reveal_k = 3;         // attribute pairs revealed per open-ended answer
  std::string sidecar_url;  // empty: built-in structured verifier
  int sidecar_timeout_ms = 2000;
};

class Verifier {
 public:
  virtual ~Verifier() = default;
  virtual VerdictLogits verdict(const std::vector<AttributeValue>& description,
                                const std::string& description_text,
                                const AttributeValue& hypothesis) const = 0;
};

class BuiltinVerifier final : public Verifier {
 public:
  VerdictLogits verdict(const std::vector<AttributeValue>& description, const std::string&,
                        const AttributeValue& hypothesis) const override {
    return verify(description, hypothesis);
  }
};

struct UserAnswer {
  enum class Kind { Yes, No, Open };
  Kind kind = Kind::Open;
  int token_count = 0;
  std::vector<AttributeValue> revealed;  // open-ended answers only
  std::string text;
};

class UserOracle {
 public:
  virtual ~UserOracle() = default;
  virtual UserAnswer answer_binary(const AttributeValue& attribute) = 0;
  virtual UserAnswer answer_open(const std::string& topic,
                                 const std::vector<AttributeValue>& already_revealed) = 0;
  virtual void notify(const std::string&) {}
};

inline std::string render_open_answer(const std::vector<AttributeValue>& revealed) {
  if (revealed.empty()) return "I have already described everything about the target.";
  std::string text = "From what I can see, the target has ";
  for (std::size_t i = 0; i < revealed.size(); ++i) {
    if (i > 0) text += revealed.size() == 2 && i == 1 ? " and " : ", ";
    if (revealed.size() > 2 && i == revealed.size() - 1) text += "and ";
    text += revealed[i].phrase;
  }
  text += ", which should help you tell it apart.";
  return text;
}

class SimulatedUser final : public UserOracle {
 public:
  SimulatedUser(const InstanceSpec& target, OracleConfig cfg, std::uint64_t seed)
      : target_(&target), cfg_(cfg), rng_(seed) {}

  UserAnswer answer_binary(const AttributeValue& attribute) override {
    bool yes = entails(target_->attribute_values(), attribute);
    if (cfg_.error_rate > 0.0 && rng_.uniform01() < cfg_.error_rate) yes = !yes;
    UserAnswer ans;
    ans.kind = yes ? UserAnswer::Kind::Yes : UserAnswer::Kind::No;
    ans.token_count = 1;
    ans.text = yes ? "Yes" : "No";
    return ans;
  }

  // Reveals up to reveal_k target pairs not yet revealed, preferring the
  // asked attribute; response length is the whitespace token count.
  UserAnswer answer_open(const std::string& topic,
                         const std::vector<AttributeValue>& already_revealed) override {
    std::vector<AttributeValue> fresh = target_->attribute_values();
    std::sort(fresh.begin(), fresh.end());
    fresh.erase(std::remove_if(fresh.begin(), fresh.end(),
                               [&](const AttributeValue& a) {
                                 for (const auto& seen : already_revealed)
                                   if (same_pair(seen, a)) return true;
                                 return false;
                               }),
                fresh.end());
    std::stable_partition(fresh.begin(), fresh.end(),
                          [&](const AttributeValue& a) { return a.attribute == topic; });
    if (static_cast<int>(fresh.size()) > cfg_.reveal_k)
      fresh.resize(static_cast<std::size_t>(cfg_.reveal_k));

    UserAnswer ans;
    ans.kind = UserAnswer::Kind::Open;
    ans.revealed = fresh;
    ans.text = render_open_answer(fresh);
    ans.token_count = count_words(ans.text);
    return ans;
  }

 private:
  const InstanceSpec* target_;
  OracleConfig cfg_;
  SplitMix64 rng_;
};

}  // namespace compnav
