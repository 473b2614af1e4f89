#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "upcs/chat_client.hpp"
#include "upcs/errors.hpp"

using namespace upcs;
using nlohmann::json;

TEST_CASE("parse_chat_completion extracts the content") {
  const json body = json::parse(
      R"({"choices":[{"message":{"role":"assistant","content":"hello"}}]})");
  CHECK(parse_chat_completion(body) == "hello");
  CHECK_THROWS_AS(parse_chat_completion(json::object()), ProviderError);
}

TEST_CASE("extract_fenced_json handles fenced and bare objects") {
  const std::string fenced = "Sure, here you go:\n```json\n{\"a\": 1}\n```\nthanks";
  CHECK(extract_fenced_json(fenced)["a"] == 1);
  CHECK(extract_fenced_json(R"({"b": 2})")["b"] == 2);
  CHECK_THROWS_AS(extract_fenced_json("no json here"), GenerationError);
  CHECK_THROWS_AS(extract_fenced_json("```json\n{\"a\": 1}"), GenerationError);
  CHECK_THROWS_AS(extract_fenced_json("[1,2,3]"), GenerationError);
}

TEST_CASE("prompt templates substitute every placeholder occurrence") {
  const auto tpl = PromptTemplate::from_string("Hi {{name}}, review: {{text}} ({{name}})");
  CHECK(tpl.render({{"name", "ada"}, {"text", "x"}}) == "Hi ada, review: x (ada)");
  // unknown placeholders are left alone
  CHECK(tpl.render({{"text", "x"}}) == "Hi {{name}}, review: x ({{name}})");
}

TEST_CASE("remote chat client round-trips the wire shape") {
  httplib::Server server;
  json seen_request;
  std::string seen_auth;
  server.Post("/v1/chat/completions",
              [&](const httplib::Request& req, httplib::Response& res) {
                seen_request = json::parse(req.body);
                if (req.has_header("Authorization")) {
                  seen_auth = req.get_header_value("Authorization");
                }
                const json reply{
                    {"choices", {{{"message", {{"content", "the reply"}}}}}}};
                res.set_content(reply.dump(), "application/json");
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("UPCS_LLM_API_KEY", "sekret", 1);
  RemoteChatConfig config;
  config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  config.model = "test-model";
  config.temperature = 0.3;
  RemoteChatClient client(config);
  const std::string reply = client.complete({{"user", "say hi"}});
  CHECK(reply == "the reply");
  CHECK(seen_request["model"] == "test-model");
  CHECK(seen_request["temperature"] == 0.3);
  CHECK(seen_request["messages"][0]["role"] == "user");
  CHECK(seen_request["messages"][0]["content"] == "say hi");
  CHECK(seen_auth == "Bearer sekret");
  unsetenv("UPCS_LLM_API_KEY");

  server.stop();
  thread.join();
}

TEST_CASE("remote chat client treats 4xx as permanent") {
  httplib::Server server;
  int hits = 0;
  server.Post("/v1/chat/completions", [&hits](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 400;
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteChatConfig config;
  config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  RemoteChatClient client(config);
  try {
    client.complete({{"user", "hi"}});
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(!e.retriable());
  }
  CHECK(hits == 1);  // no retry on a permanent failure

  server.stop();
  thread.join();
}
