#pragma once

#include <string>

namespace tte {

struct HttpUrl {
    std::string scheme_host_port;  // "http://host:port"
    std::string path;              // "/v1/embed"
};

// Throws InvalidArgument on anything but http://host[:port][/path].
HttpUrl parse_http_url(const std::string& url);

// POSTs a JSON body and returns the response body; transport failures and
// non-2xx statuses throw ProviderUnavailable.
std::string http_post_json(const std::string& url, const std::string& body, int timeout_s = 120);

}  // namespace tte
