#pragma once

// Internal helper shared by the remote provider clients. Not installed.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include "httplib.h"
#include "upcs/errors.hpp"

namespace upcs::internal {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline Endpoint split_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("endpoint must start with http:// or https://: " + endpoint);
  }
  const auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

// JSON POST with exponential backoff (100ms * 2^attempt) on transport
// errors, 429 and 5xx. Non-retriable statuses throw immediately.
inline std::string post_json_with_retries(const std::string& endpoint,
                                          const std::string& body,
                                          const std::string& api_key_env,
                                          int timeout_ms, int max_attempts,
                                          const char* what) {
  const Endpoint ep = split_endpoint(endpoint);
  httplib::Client client(ep.origin);
  client.set_connection_timeout(0, timeout_ms * 1000);
  client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  httplib::Headers headers;
  if (const char* key = std::getenv(api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error;
  for (int attempt = 0; attempt < std::max(1, max_attempts); ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
    }
    auto res = client.Post(ep.path, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return res->body;
    if (res->status != 429 && res->status < 500) {
      throw ProviderError(std::string(what) + " request failed with HTTP " +
                              std::to_string(res->status),
                          /*retriable=*/false);
    }
    last_error = "HTTP " + std::to_string(res->status);
  }
  throw ProviderError(std::string(what) + " request failed after retries: " + last_error,
                      /*retriable=*/true);
}

}  // namespace upcs::internal
