#pragma once

#include <vector>

#include "compnav/judge.hpp"
#include "compnav/oracle.hpp"
#include "compnav/pool.hpp"

namespace compnav {

// Attribute pairs revealed by open-ended answers; append-only, deduplicated.
struct FactSet {
  std::vector<AttributeValue> facts;

  void add(const std::vector<AttributeValue>& revealed) {
    for (const AttributeValue& a : revealed) {
      bool dup = false;
      for (const AttributeValue& f : facts)
        if (same_pair(f, a)) dup = true;
      if (!dup) facts.push_back(a);
    }
  }

  bool has_key(const std::string& key) const {
    for (const AttributeValue& f : facts)
      if (f.attribute == key) return true;
    return false;
  }
};

// Mean entailment of the candidate's description against each collected
// fact; an empty fact set scores the uninformative prior 0.5.
inline double consistency_score(const Candidate& cand, const FactSet& facts,
                                const Verifier& verifier) {
  if (facts.facts.empty()) return 0.5;
  long double sum = 0.0L;
  for (const AttributeValue& f : facts.facts)
    sum += entailment_score(cand.description, cand.text, f, verifier);
  return static_cast<double>(sum / static_cast<long double>(facts.facts.size()));
}

}  // namespace compnav
