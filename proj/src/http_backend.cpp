// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "peek/error.hpp"
#include "peek/probe_harness.hpp"

namespace peek {

HttpBackend::HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto scheme_end = cfg_.endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw ValidationError("backend endpoint must be an http(s) URL: " + cfg_.endpoint);
  const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
  base_ = cfg_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : cfg_.endpoint.substr(path_start);
  if (!cfg_.api_key_env.empty()) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (!key || !*key)
      throw ValidationError("environment variable " + cfg_.api_key_env +
                            " is not set (backend API key)");
    api_key_ = key;
  }
}

json HttpBackend::send(const json& request) {
  // httplib::Client is not safe for concurrent use; one per request.
  httplib::Client client(base_);
  const auto secs = static_cast<time_t>(cfg_.request_timeout_s);
  const auto usecs = static_cast<time_t>((cfg_.request_timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto res = client.Post(path_, headers, request.dump(), "application/json");
  if (!res) throw BackendError("request failed: " + httplib::to_string(res.error()), true);
  if (res->status == 429 || res->status >= 500)
    throw BackendError("HTTP " + std::to_string(res->status), true);
  if (res->status != 200)
    throw BackendError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200),
                       false);
  try {
    return json::parse(res->body);
  } catch (const json::exception&) {
    throw BackendError("response body is not JSON", false);
  }
}

}  // namespace peek
