#pragma once

#include <string>

#include "tapsynth/error.hpp"

namespace tapsynth::detail {

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;
};

inline Endpoint split_url(const std::string& url, ErrorCode code) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw Error(code, "malformed endpoint url '" + url + "'");
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace tapsynth::detail
