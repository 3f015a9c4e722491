#pragma once

#include <chrono>
#include <string>

#include <json.hpp>

namespace dataless {

struct HttpSettings {
  // e.g. "http://localhost:8080/v1"; the route is appended to it.
  std::string base_url;
  // Name of the environment variable holding a bearer token; empty for none.
  std::string token_env;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{200};
};

// POSTs a JSON body to base_url + route and returns the parsed JSON reply.
// Transport errors, 5xx and 429 responses are retried up to max_retries
// times; other failures and exhausted retries throw ProviderError.
nlohmann::json post_json(const HttpSettings& settings, const std::string& route,
                         const nlohmann::json& body);

}  // namespace dataless
