#include "upcs/chat_client.hpp"

#include <fstream>
#include <sstream>

#include "http_util.hpp"
#include "upcs/errors.hpp"

namespace upcs {

using nlohmann::json;

RemoteChatClient::RemoteChatClient(RemoteChatConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw ValidationError("remote chat client needs an endpoint");
}

std::string RemoteChatClient::complete(const std::vector<ChatMessage>& messages) {
  json msgs = json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", m.role}, {"content", m.content}});
  }
  const json body{{"model", config_.model},
                  {"messages", msgs},
                  {"temperature", config_.temperature}};
  const std::string response = internal::post_json_with_retries(
      config_.endpoint, body.dump(), config_.api_key_env, config_.timeout_ms,
      config_.max_attempts, "chat completion");
  json j;
  try {
    j = json::parse(response);
  } catch (const json::exception& e) {
    throw ProviderError(std::string("completion response is not JSON: ") + e.what(),
                        /*retriable=*/true);
  }
  return parse_chat_completion(j);
}

std::string parse_chat_completion(const json& body) {
  try {
    return body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("unexpected completion shape: ") + e.what(),
                        /*retriable=*/true);
  }
}

json extract_fenced_json(const std::string& completion) {
  std::string candidate;
  auto fence = completion.find("```");
  if (fence != std::string::npos) {
    auto body_start = completion.find('\n', fence);
    auto fence_end = body_start == std::string::npos
                         ? std::string::npos
                         : completion.find("```", body_start);
    if (body_start == std::string::npos || fence_end == std::string::npos) {
      throw GenerationError("unterminated code fence in completion", completion);
    }
    candidate = completion.substr(body_start + 1, fence_end - body_start - 1);
  } else {
    candidate = completion;
  }
  try {
    json j = json::parse(candidate);
    if (!j.is_object()) {
      throw GenerationError("completion JSON is not an object", completion);
    }
    return j;
  } catch (const json::exception& e) {
    throw GenerationError(std::string("completion is not parseable JSON: ") + e.what(),
                          completion);
  }
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open prompt template: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str());
}

PromptTemplate PromptTemplate::from_string(std::string text) {
  PromptTemplate t;
  t.text_ = std::move(text);
  return t;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
  std::string out = text_;
  for (const auto& [name, value] : values) {
    const std::string placeholder = "{{" + name + "}}";
    std::size_t pos = 0;
    while ((pos = out.find(placeholder, pos)) != std::string::npos) {
      out.replace(pos, placeholder.size(), value);
      pos += value.size();
    }
  }
  return out;
}

}  // namespace upcs
