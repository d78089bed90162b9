#pragma once

#include <string>

#include <httplib.h>

namespace scenenoise::detail {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // at least "/"
};

ParsedUrl split_url(const std::string& url);

// POSTs `body` and returns the response body. Throws TransportError on
// connection failures, timeouts and non-2xx statuses.
std::string http_post(const std::string& url, const std::string& body, const std::string& content_type,
                      double timeout_seconds);

}  // namespace scenenoise::detail
