#pragma once

#include <stdexcept>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "compnav/oracle.hpp"

namespace compnav {

class SidecarError : public std::runtime_error {
 public:
  explicit SidecarError(const std::string& what) : std::runtime_error(what) {}
};

// Entailment verdicts from an external model server:
//   POST /entail {"premise": ..., "hypothesis": ...}
//   -> 200 {"entail": number, "neutral": number, "contradict": number}
// Any transport or protocol failure is fatal to the episode.
class SidecarVerifier final : public Verifier {
 public:
  explicit SidecarVerifier(const std::string& url, int timeout_ms = 2000)
      : url_(url), timeout_ms_(timeout_ms) {
    std::string rest = url;
    const std::string scheme = "http://";
    if (rest.rfind(scheme, 0) == 0) rest = rest.substr(scheme.size());
    while (!rest.empty() && rest.back() == '/') rest.pop_back();
    const auto colon = rest.find(':');
    if (colon == std::string::npos) {
      host_ = rest;
      port_ = 80;
    } else {
      host_ = rest.substr(0, colon);
      port_ = std::stoi(rest.substr(colon + 1));
    }
    if (host_.empty()) throw SidecarError("bad sidecar url: " + url);
  }

  VerdictLogits verdict(const std::vector<AttributeValue>&, const std::string& description_text,
                        const AttributeValue& hypothesis) const override {
    nlohmann::json req;
    req["premise"] = description_text;
    req["hypothesis"] = "The instance has " + hypothesis.phrase + ".";

    httplib::Client client(host_, port_);
    client.set_connection_timeout(0, timeout_ms_ * 1000);
    client.set_read_timeout(0, timeout_ms_ * 1000);
    client.set_write_timeout(0, timeout_ms_ * 1000);

    auto res = client.Post("/entail", req.dump(), "application/json");
    if (!res) throw SidecarError("sidecar unreachable or timed out: " + url_);
    if (res->status != 200)
      throw SidecarError("sidecar returned status " + std::to_string(res->status) + ": " +
                         res->body);

    nlohmann::json body;
    try {
      body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception&) {
      throw SidecarError("sidecar returned malformed JSON: " + res->body);
    }
    if (!body.contains("entail") || !body.contains("neutral") || !body.contains("contradict") ||
        !body["entail"].is_number() || !body["neutral"].is_number() ||
        !body["contradict"].is_number())
      throw SidecarError("sidecar response missing logits: " + res->body);

    VerdictLogits v;
    v.entail = body["entail"].get<double>();
    v.neutral = body["neutral"].get<double>();
    v.contradict = body["contradict"].get<double>();
    return v;
  }

  const std::string& url() const { return url_; }

 private:
  std::string url_;
  std::string host_;
  int port_ = 80;
  int timeout_ms_ = 2000;
};

}  // namespace compnav
