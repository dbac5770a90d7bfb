#pragma once

#include <memory>
#include <string>

#include "statetrack/judge.hpp"

namespace statetrack::cli {

// Judge backed by an OpenAI-compatible chat-completions endpoint. The API
// key is read from STATETRACK_JUDGE_API_KEY.
std::unique_ptr<Judge> make_http_judge(const std::string& base_url, const std::string& model);

}  // namespace statetrack::cli
