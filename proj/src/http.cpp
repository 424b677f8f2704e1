#include "tte/http.hpp"

#include "httplib.h"
#include "tte/error.hpp"

namespace tte {

HttpUrl parse_http_url(const std::string& url) {
    const std::string prefix = "http://";
    if (url.rfind(prefix, 0) != 0 || url.size() == prefix.size()) {
        throw Error(ErrorCode::InvalidArgument, "expected http://host[:port]/path, got '" + url + "'");
    }
    std::size_t slash = url.find('/', prefix.size());
    HttpUrl out;
    out.scheme_host_port = url.substr(0, slash);
    out.path = slash == std::string::npos ? "/" : url.substr(slash);
    return out;
}

std::string http_post_json(const std::string& url, const std::string& body, int timeout_s) {
    const HttpUrl u = parse_http_url(url);
    httplib::Client client(u.scheme_host_port);
    client.set_connection_timeout(timeout_s, 0);
    client.set_read_timeout(timeout_s, 0);
    auto res = client.Post(u.path, body, "application/json");
    if (!res) {
        throw Error(ErrorCode::ProviderUnavailable,
                    "POST " + url + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error(ErrorCode::ProviderUnavailable, "POST " + url + " returned " + std::to_string(res->status));
    }
    return res->body;
}

}  // namespace tte
