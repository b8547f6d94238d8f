#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "compnav/world.hpp"

namespace compnav {

inline constexpr int kEmbedDim = 256;
using Embedding = std::array<double, kEmbedDim>;

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline int embed_slot(std::string_view token) {
  return static_cast<int>(fnv1a64(token) % kEmbedDim);
}

// Hashed bag of tokens, l2-normalized. Deterministic across runs.
inline Embedding embed_tokens(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw std::invalid_argument("cannot embed an empty token set");
  Embedding e{};
  for (const std::string& t : tokens) e[embed_slot(t)] += 1.0;
  double norm = 0.0;
  for (double v : e) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : e) v /= norm;
  return e;
}

// Text-side embedding: one token per attribute-value pair.
inline Embedding embed_text(const std::vector<AttributeValue>& description) {
  if (description.empty()) throw std::invalid_argument("cannot embed an empty description");
  std::vector<std::string> tokens;
  tokens.reserve(description.size());
  for (const auto& a : description) tokens.push_back(a.token());
  return embed_tokens(tokens);
}

inline double dot(const Embedding& a, const Embedding& b) {
  double s = 0.0;
  for (int i = 0; i < kEmbedDim; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace compnav
