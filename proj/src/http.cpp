#include "dataless/http.hpp"

#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "dataless/errors.hpp"
#include "dataless/util.hpp"

namespace dataless {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw InputError("endpoint URL needs a scheme: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.origin = url;
  } else {
    out.origin = url.substr(0, path_start);
    out.path = url.substr(path_start);
  }
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

}  // namespace

nlohmann::json post_json(const HttpSettings& settings, const std::string& route,
                         const nlohmann::json& body) {
  const ParsedUrl url = parse_url(settings.base_url);
  const std::string path = url.path + route;

  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(
      settings.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
      settings.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (!settings.token_env.empty()) {
    const char* token = std::getenv(settings.token_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw ProviderError("bearer token variable " + settings.token_env +
                          " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  const std::string payload = body.dump();
  std::string last_error;
  auto delay = settings.backoff;
  for (int attempt = 0; attempt <= settings.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw ProviderError("POST " + settings.base_url + route + " returned HTTP " +
                          std::to_string(res->status) + ": " + res->body);
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw ProviderError("POST " + settings.base_url + route +
                          " returned invalid JSON: " + e.what());
    }
  }
  throw ProviderError("POST " + settings.base_url + route + " failed after " +
                      std::to_string(settings.max_retries + 1) +
                      " attempts: " + last_error);
}

}  // namespace dataless
