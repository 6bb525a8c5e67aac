#pragma once

// Internal helpers shared by the HTTP backend adapters.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace promptaug::detail {

struct Endpoint {
    std::string base; // scheme://host[:port]
    std::string path; // "/..." (defaults to "/")
};

/// Splits "http://host:port/path" into base and path. Only http:// is supported.
Endpoint parse_endpoint(std::string_view url);

std::string base64_encode(std::span<const std::uint8_t> bytes);

} // namespace promptaug::detail
