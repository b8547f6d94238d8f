#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "compnav/oracle.hpp"
#include "compnav/pool.hpp"

namespace compnav {

struct JudgeConfig {
  double tau = 0.9;            // refinement threshold; also used for pre-pruning
  int question_budget = 4;
  double min_contrast = 1e-9;  // below this no attribute splits the pool
  bool use_refinement = true;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// s(d, a) = sigmoid(entail - max(neutral, contradict))
inline double entailment_score_from_logits(const VerdictLogits& v) {
  return sigmoid(v.entail - std::max(v.neutral, v.contradict));
}

inline double entailment_score(const std::vector<AttributeValue>& description,
                               const std::string& description_text, const AttributeValue& attribute,
                               const Verifier& verifier) {
  return entailment_score_from_logits(verifier.verdict(description, description_text, attribute));
}

// ---------------------------------------------------------------------------
// Similarity and core-set selection
// ---------------------------------------------------------------------------

// Average of text and visual embedding cosines.
inline double pairwise_similarity(const Candidate& a, const Candidate& b) {
  return 0.5 * (dot(a.text_embedding, b.text_embedding) +
                dot(a.image_embedding, b.image_embedding));
}

struct SimilarityMatrix {
  std::vector<int> ids;        // ascending candidate ids
  std::vector<double> values;  // n x n, row-major over id positions

  int position(int id) const {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    return static_cast<int>(it - ids.begin());
  }
  double at(int id_a, int id_b) const {
    return values[static_cast<std::size_t>(position(id_a)) * ids.size() + position(id_b)];
  }
};

inline SimilarityMatrix build_similarity(const CandidatePool& pool, const std::vector<int>& ids) {
  SimilarityMatrix S;
  S.ids = ids;
  std::sort(S.ids.begin(), S.ids.end());
  const std::size_t n = S.ids.size();
  S.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double v =
          i == j ? 1.0 : pairwise_similarity(pool.by_id(S.ids[i]), pool.by_id(S.ids[j]));
      S.values[i * n + j] = v;
      S.values[j * n + i] = v;
    }
  return S;
}

// Mean pairwise similarity over ordered pairs; the diagonal is ignored.
// Accumulated in extended precision so that subsets with equal real-valued
// means compare as exact ties.
inline long double rho_precise(const std::vector<int>& subset, const SimilarityMatrix& S) {
  if (subset.size() < 2) throw std::invalid_argument("rho needs at least two candidates");
  long double sum = 0.0L;
  for (int a : subset)
    for (int b : subset)
      if (a != b) sum += static_cast<long double>(S.at(a, b));
  return sum / (static_cast<long double>(subset.size()) * (subset.size() - 1));
}

inline double rho(const std::vector<int>& subset, const SimilarityMatrix& S) {
  return static_cast<double>(rho_precise(subset, S));
}

// Greedy peeling: repeatedly drop the member with the lowest total similarity
// (ties: lowest id) down to two members, then return the intermediate set
// with the highest intra-set similarity (ties: the larger set). If the best
// intermediate is the full set and a proper subset of size >= 2 exists, the
// largest proper subset is returned so a question can still split the pool.
inline std::vector<int> greedy_peel(const std::vector<int>& active, const SimilarityMatrix& S) {
  if (active.size() < 2) throw std::invalid_argument("greedy_peel needs at least two candidates");
  std::vector<int> current = active;
  std::sort(current.begin(), current.end());

  std::vector<std::vector<int>> chain;
  chain.push_back(current);
  while (current.size() > 2) {
    int worst = current.front();
    long double worst_sum = std::numeric_limits<long double>::infinity();
    for (int i : current) {
      long double row = 0.0L;
      for (int j : current)
        if (j != i) row += static_cast<long double>(S.at(i, j));
      if (row < worst_sum) {
        worst_sum = row;
        worst = i;
      }
    }
    current.erase(std::find(current.begin(), current.end(), worst));
    chain.push_back(current);
  }

  std::size_t best = 0;
  long double best_rho = rho_precise(chain[0], S);
  for (std::size_t l = 1; l < chain.size(); ++l) {
    const long double r = rho_precise(chain[l], S);
    if (r > best_rho) {
      best_rho = r;
      best = l;
    }
  }
  if (best == 0 && chain.size() > 1) best = 1;  // keep the remainder non-empty
  return chain[best];
}

// ---------------------------------------------------------------------------
// Discriminative attribute discovery
// ---------------------------------------------------------------------------

struct Fact {
  AttributeValue attribute;
  bool answer_yes = false;
};

// Union of the attribute pairs in the core members' descriptions, canonical
// order. Pairs already settled by recorded facts are not proposed again.
inline std::vector<AttributeValue> extract_attributes(const std::vector<int>& core,
                                                      const CandidatePool& pool,
                                                      const std::vector<Fact>& facts = {}) {
  std::vector<AttributeValue> out;
  for (int id : core)
    for (const auto& a : pool.by_id(id).description) out.push_back(a);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](const AttributeValue& a, const AttributeValue& b) {
                          return same_pair(a, b);
                        }),
            out.end());
  out.erase(std::remove_if(out.begin(), out.end(),
                           [&](const AttributeValue& a) {
                             for (const Fact& f : facts)
                               if (same_pair(f.attribute, a)) return true;
                             return false;
                           }),
            out.end());
  return out;
}

struct AttributeContrast {
  AttributeValue attribute;
  double contrast = 0.0;
};

// ---------------------------------------------------------------------------
// Pruning
// ---------------------------------------------------------------------------

// Keeps candidates consistent with every recorded fact: yes-facts demand an
// entailment score at or above tau, no-facts one below it.
inline std::vector<int> preprune_consistent(const std::vector<int>& ids,
                                            const std::vector<Fact>& facts,
                                            const CandidatePool& pool, const Verifier& verifier,
                                            double tau) {
  std::vector<int> kept;
  for (int id : ids) {
    const Candidate& cand = pool.by_id(id);
    bool ok = true;
    for (const Fact& f : facts) {
      const double s = entailment_score(cand.description, cand.text, f.attribute, verifier);
      if (f.answer_yes ? s < tau : s >= tau) {
        ok = false;
        break;
      }
    }
    if (ok) kept.push_back(id);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

struct PruneOutcome {
  std::vector<int> next_active;
  bool identified = false;
  bool needs_exploration = false;
};

// Eq-style binary prune: a yes keeps the core, a no keeps the remainder. A no
// against an empty remainder is the re-exploration signal, not an error.
inline PruneOutcome prune(const std::vector<int>& core, const std::vector<int>& remainder,
                          bool answer_yes) {
  PruneOutcome out;
  if (answer_yes) {
    out.next_active = core;
  } else {
    if (remainder.empty()) {
      out.next_active = core;
      out.needs_exploration = true;
      return out;
    }
    out.next_active = remainder;
  }
  out.identified = out.next_active.size() == 1;
  return out;
}

// ---------------------------------------------------------------------------
// Round transcript
// ---------------------------------------------------------------------------

struct RoundRecord {
  int round = 0;
  std::vector<int> active;
  std::vector<int> core;       // post-refinement
  std::vector<int> remainder;  // post-refinement
  std::vector<AttributeContrast> contrasts;
  std::optional<AttributeValue> selected;
  std::string question;
  std::string answer;  // "yes" | "no" | "" when no question was asked
  std::vector<int> next_active;
};

inline json round_to_json(const RoundRecord& r) {
  json j;
  j["round"] = r.round;
  j["active"] = r.active;
  j["core"] = r.core;
  j["remainder"] = r.remainder;
  json attrs = json::array();
  for (const auto& c : r.contrasts)
    attrs.push_back({{"attribute", c.attribute.attribute},
                     {"value", c.attribute.value},
                     {"contrast", c.contrast}});
  j["attributes"] = std::move(attrs);
  if (r.selected) {
    j["selected"] = {{"attribute", r.selected->attribute}, {"value", r.selected->value}};
  } else {
    j["selected"] = nullptr;
  }
  j["question"] = r.question;
  j["answer"] = r.answer;
  j["next_active"] = r.next_active;
  return j;
}

// ---------------------------------------------------------------------------
// Recursive comparative judgment engine
// ---------------------------------------------------------------------------

enum class RcjStatus { Identified, BudgetExhausted, NeedsExploration };

struct RcjResult {
  RcjStatus status = RcjStatus::NeedsExploration;
  int candidate = -1;
};

class RcjEngine {
 public:
  RcjEngine(const CandidatePool& pool, const Verifier& verifier, JudgeConfig cfg)
      : pool_(&pool), verifier_(&verifier), cfg_(cfg) {}

  // Starts or resumes judgment on the given active set. Facts, the question
  // budget, and the transcript persist across resumptions.
  void set_active(std::vector<int> ids) {
    std::sort(ids.begin(), ids.end());
    active_ = std::move(ids);
    scores_.clear();  // descriptions may have been re-finalized
  }

  const std::vector<int>& active() const { return active_; }
  const std::vector<Fact>& facts() const { return facts_; }
  int questions_asked() const { return questions_; }
  int response_tokens() const { return tokens_; }
  const std::vector<RoundRecord>& transcript() const { return transcript_; }

  // Scores are keyed on (candidate id, attribute pair) so evaluation order
  // cannot matter.
  double score(int cid, const AttributeValue& attr) const {
    const auto key = std::make_pair(cid, attr.token());
    auto it = scores_.find(key);
    if (it != scores_.end()) return it->second;
    const Candidate& cand = pool_->by_id(cid);
    const double s = entailment_score(cand.description, cand.text, attr, *verifier_);
    scores_.emplace(key, s);
    return s;
  }

  std::optional<std::pair<AttributeValue, double>> select_da(
      const std::vector<AttributeValue>& attrs, const std::vector<int>& core,
      const std::vector<int>& remainder, std::vector<AttributeContrast>* all = nullptr) const {
    std::optional<std::pair<AttributeValue, double>> best;
    for (const AttributeValue& a : attrs) {  // canonical order: first wins ties
      long double core_mean = 0.0L;
      for (int id : core) core_mean += score(id, a);
      core_mean /= static_cast<long double>(core.size());
      long double rem_mean = 0.0L;
      if (!remainder.empty()) {
        for (int id : remainder) rem_mean += score(id, a);
        rem_mean /= static_cast<long double>(remainder.size());
      }
      const double contrast = static_cast<double>(core_mean - rem_mean);
      if (all) all->push_back({a, contrast});
      if (!best || contrast > best->second) best = std::make_pair(a, contrast);
    }
    return best;
  }

  // Moves remainder members whose score on the selected attribute clears tau
  // into the core.
  void refine(std::vector<int>& core, std::vector<int>& remainder,
              const AttributeValue& attr) const {
    std::vector<int> stay;
    for (int id : remainder) {
      if (score(id, attr) >= cfg_.tau) {
        core.push_back(id);
      } else {
        stay.push_back(id);
      }
    }
    std::sort(core.begin(), core.end());
    remainder = std::move(stay);
  }

  std::vector<int> preprune(const std::vector<int>& ids) const {
    return preprune_consistent(ids, facts_, *pool_, *verifier_, cfg_.tau);
  }

  RcjResult run(UserOracle& user) {
    while (true) {
      if (active_.empty()) return {RcjStatus::NeedsExploration, -1};
      if (active_.size() == 1) return {RcjStatus::Identified, active_[0]};

      const SimilarityMatrix S = build_similarity(*pool_, active_);
      std::vector<int> core = greedy_peel(active_, S);
      std::vector<int> remainder = set_difference_sorted(active_, core);

      RoundRecord rec;
      rec.round = round_++;
      rec.active = active_;

      const std::vector<AttributeValue> attrs = extract_attributes(core, *pool_, facts_);
      auto best = select_da(attrs, core, remainder, &rec.contrasts);
      if (!best || best->second < cfg_.min_contrast) {
        rec.core = core;
        rec.remainder = remainder;
        rec.next_active = active_;
        transcript_.push_back(std::move(rec));
        return {RcjStatus::NeedsExploration, -1};
      }
      const AttributeValue da = best->first;
      if (cfg_.use_refinement) refine(core, remainder, da);
      rec.core = core;
      rec.remainder = remainder;
      rec.selected = da;

      if (questions_ >= cfg_.question_budget) {
        transcript_.push_back(std::move(rec));
        return {RcjStatus::BudgetExhausted, most_typical(active_, S)};
      }

      rec.question = "Does the target have " + da.phrase + "?";
      const UserAnswer ans = user.answer_binary(da);
      ++questions_;
      tokens_ += ans.token_count;
      const bool yes = ans.kind == UserAnswer::Kind::Yes;
      rec.answer = yes ? "yes" : "no";
      facts_.push_back({da, yes});

      const PruneOutcome outcome = prune(core, remainder, yes);
      rec.next_active = outcome.needs_exploration ? std::vector<int>{} : outcome.next_active;
      transcript_.push_back(std::move(rec));

      if (outcome.needs_exploration) return {RcjStatus::NeedsExploration, -1};
      active_ = outcome.next_active;
    }
  }

  // Budget-exhaustion fallback: the active candidate with the highest mean
  // similarity to the rest (ties: lowest id).
  static int most_typical(const std::vector<int>& active, const SimilarityMatrix& S) {
    if (active.size() == 1) return active[0];
    int best = active.front();
    long double best_mean = -std::numeric_limits<long double>::infinity();
    for (int i : active) {
      long double m = 0.0L;
      for (int j : active)
        if (j != i) m += S.at(i, j);
      m /= static_cast<long double>(active.size() - 1);
      if (m > best_mean) {
        best_mean = m;
        best = i;
      }
    }
    return best;
  }

  static std::vector<int> set_difference_sorted(const std::vector<int>& all,
                                                const std::vector<int>& minus) {
    std::vector<int> out;
    std::set_difference(all.begin(), all.end(), minus.begin(), minus.end(),
                        std::back_inserter(out));
    return out;
  }

 private:
  const CandidatePool* pool_;
  const Verifier* verifier_;
  JudgeConfig cfg_;
  std::vector<int> active_;
  std::vector<Fact> facts_;
  int questions_ = 0;
  int tokens_ = 0;
  int round_ = 0;
  mutable std::map<std::pair<int, std::string>, double> scores_;
  std::vector<RoundRecord> transcript_;
};

// ---------------------------------------------------------------------------
// Non-interactive variant: goal-derived attributes, always-core updates,
// accept/reject verification instead of user answers.
// ---------------------------------------------------------------------------

struct TextNavOutcome {
  enum class Status { Accept, Reject, NeedCandidates };
  Status status = Status::NeedCandidates;
  int candidate = -1;
};

class TextNavJudge {
 public:
  TextNavJudge(const CandidatePool& pool, const Verifier& verifier, JudgeConfig cfg,
               std::vector<AttributeValue> goal_attributes)
      : pool_(&pool), verifier_(&verifier), cfg_(cfg), goal_(std::move(goal_attributes)) {
    std::sort(goal_.begin(), goal_.end());
  }

  const std::set<int>& rejected() const { return rejected_; }
  const std::vector<RoundRecord>& transcript() const { return transcript_; }

  // All goal attributes must be entailed for a candidate to be accepted.
  bool verify_candidate(int cid) const {
    for (const AttributeValue& a : goal_)
      if (score(cid, a) < cfg_.tau) return false;
    return true;
  }

  void invalidate_scores() { scores_.clear(); }

  TextNavOutcome run(const std::vector<int>& pool_ids) {
    std::vector<int> active;
    for (int id : pool_ids)
      if (!rejected_.count(id)) active.push_back(id);
    std::sort(active.begin(), active.end());

    while (true) {
      if (active.empty()) return {TextNavOutcome::Status::NeedCandidates, -1};
      if (active.size() == 1) return decide(active[0]);

      const SimilarityMatrix S = build_similarity(*pool_, active);
      std::vector<int> core = greedy_peel(active, S);
      std::vector<int> remainder = RcjEngine::set_difference_sorted(active, core);

      RoundRecord rec;
      rec.round = round_++;
      rec.active = active;

      AttributeValue da = goal_.front();
      {
        std::optional<std::pair<AttributeValue, long double>> best;
        for (const AttributeValue& a : goal_) {
          long double core_mean = 0.0L;
          for (int id : core) core_mean += score(id, a);
          core_mean /= static_cast<long double>(core.size());
          long double rem_mean = 0.0L;
          if (!remainder.empty()) {
            for (int id : remainder) rem_mean += score(id, a);
            rem_mean /= static_cast<long double>(remainder.size());
          }
          const long double contrast = core_mean - rem_mean;
          rec.contrasts.push_back({a, static_cast<double>(contrast)});
          if (!best || contrast > best->second) best = std::make_pair(a, contrast);
        }
        da = best->first;
      }

      if (cfg_.use_refinement) {
        std::vector<int> stay;
        for (int id : remainder) {
          if (score(id, da) >= cfg_.tau) {
            core.push_back(id);
          } else {
            stay.push_back(id);
          }
        }
        std::sort(core.begin(), core.end());
        remainder = std::move(stay);
      }
      rec.core = core;
      rec.remainder = remainder;
      rec.selected = da;

      if (remainder.empty()) {
        // Verify the core member that best supports the round's attribute.
        int pick = core.front();
        double best_s = -1.0;
        for (int id : core) {
          const double s = score(id, da);
          if (s > best_s) {
            best_s = s;
            pick = id;
          }
        }
        rec.next_active = {pick};
        transcript_.push_back(std::move(rec));
        return decide(pick);
      }

      rec.next_active = core;  // goal attributes hold for the target: always keep the core
      transcript_.push_back(std::move(rec));
      active = core;
    }
  }

 private:
  TextNavOutcome decide(int cid) {
    if (verify_candidate(cid)) return {TextNavOutcome::Status::Accept, cid};
    rejected_.insert(cid);
    return {TextNavOutcome::Status::Reject, cid};
  }

  double score(int cid, const AttributeValue& attr) const {
    const auto key = std::make_pair(cid, attr.token());
    auto it = scores_.find(key);
    if (it != scores_.end()) return it->second;
    const Candidate& cand = pool_->by_id(cid);
    const double s = entailment_score(cand.description, cand.text, attr, *verifier_);
    scores_.emplace(key, s);
    return s;
  }

  const CandidatePool* pool_;
  const Verifier* verifier_;
  JudgeConfig cfg_;
  std::vector<AttributeValue> goal_;
  std::set<int> rejected_;
  mutable std::map<std::pair<int, std::string>, double> scores_;
  std::vector<RoundRecord> transcript_;
  int round_ = 0;
};

}  // namespace compnav
