#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "http_judge.hpp"

#include <cstdlib>

#include "httplib.h"
#include "statetrack/io.hpp"

namespace statetrack::cli {

std::unique_ptr<Judge> make_http_judge(const std::string& base_url, const std::string& model) {
  const char* key = std::getenv("STATETRACK_JUDGE_API_KEY");
  if (!key || !*key) throw ValidationError("external judge needs STATETRACK_JUDGE_API_KEY");
  auto client = std::make_shared<httplib::Client>(base_url);
  client->set_read_timeout(60, 0);
  client->set_bearer_token_auth(key);
  auto transport = [client, model](const std::string& system, const std::string& user) {
    const json body{{"model", model},
                    {"temperature", 0},
                    {"messages", json::array({json{{"role", "system"}, {"content", system}},
                                              json{{"role", "user"}, {"content", user}}})}};
    auto res = client->Post("/v1/chat/completions", body.dump(), "application/json");
    if (!res) throw IoError("judge request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw IoError("judge endpoint returned HTTP " + std::to_string(res->status));
    try {
      const auto reply = json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw JudgeProtocolError(std::string("unexpected judge response: ") + e.what());
    }
  };
  return std::make_unique<ExternalJudge>(transport);
}

}  // namespace statetrack::cli
