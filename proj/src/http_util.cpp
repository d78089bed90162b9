#include "http_util.hpp"

#include <cmath>
#include <cstdlib>

#include "scenenoise/error.hpp"

namespace scenenoise::detail {

ParsedUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw InvalidArgument("endpoint must be an absolute URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

std::string http_post(const std::string& url, const std::string& body, const std::string& content_type,
                      double timeout_seconds) {
  const ParsedUrl u = split_url(url);
  if (u.origin.rfind("http://", 0) != 0) {
    throw InvalidArgument("only plain http endpoints are supported: " + url);
  }
  httplib::Client client(u.origin);
  const auto sec = static_cast<time_t>(timeout_seconds);
  const auto usec = static_cast<time_t>((timeout_seconds - std::floor(timeout_seconds)) * 1e6);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);

  httplib::Headers headers;
  if (const char* key = std::getenv("SCENENOISE_API_KEY"); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto res = client.Post(u.path, headers, body, content_type);
  if (!res) throw TransportError("request to " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("request to " + url + " returned HTTP " + std::to_string(res->status));
  }
  return res->body;
}

}  // namespace scenenoise::detail
