// net.hpp - IP addresses and CIDR prefixes
#pragma once

#include <arpa/inet.h>

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>

namespace wfp {

// IPv4 or IPv6 address held as raw network-order bytes.
struct IpAddr {
    std::array<uint8_t, 16> bytes{};
    uint8_t size = 4; // 4 or 16

    static IpAddr v4(uint8_t a, uint8_t b, uint8_t c, uint8_t d) {
        IpAddr ip;
        ip.size = 4;
        ip.bytes = {a, b, c, d};
        return ip;
    }

    static std::optional<IpAddr> parse(const std::string& text) {
        IpAddr ip;
        if (inet_pton(AF_INET, text.c_str(), ip.bytes.data()) == 1) {
            ip.size = 4;
            return ip;
        }
        if (inet_pton(AF_INET6, text.c_str(), ip.bytes.data()) == 1) {
            ip.size = 16;
            return ip;
        }
        return std::nullopt;
    }

    std::string to_string() const {
        char buf[INET6_ADDRSTRLEN] = {};
        inet_ntop(size == 4 ? AF_INET : AF_INET6, bytes.data(), buf, sizeof(buf));
        return buf;
    }

    bool operator==(const IpAddr& rhs) const {
        return size == rhs.size && std::memcmp(bytes.data(), rhs.bytes.data(), size) == 0;
    }

    // Lexicographic over the used bytes; shorter address wins on a tie prefix.
    std::strong_ordering operator<=>(const IpAddr& rhs) const {
        int n = std::min(size, rhs.size);
        int c = std::memcmp(bytes.data(), rhs.bytes.data(), static_cast<size_t>(n));
        if (c != 0) return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
        return size <=> rhs.size;
    }
};

struct Cidr {
    IpAddr base;
    int prefix_len = 0;

    // Accepts "a.b.c.d", "a.b.c.d/n", and IPv6 equivalents; a bare address
    // becomes a full-length prefix.
    static std::optional<Cidr> parse(const std::string& text) {
        Cidr out;
        auto slash = text.find('/');
        std::string addr_part = slash == std::string::npos ? text : text.substr(0, slash);
        auto addr = IpAddr::parse(addr_part);
        if (!addr) return std::nullopt;
        out.base = *addr;
        int max_len = addr->size * 8;
        if (slash == std::string::npos) {
            out.prefix_len = max_len;
            return out;
        }
        try {
            size_t used = 0;
            int len = std::stoi(text.substr(slash + 1), &used);
            if (used != text.size() - slash - 1 || len < 0 || len > max_len) return std::nullopt;
            out.prefix_len = len;
        } catch (...) {
            return std::nullopt;
        }
        return out;
    }

    bool contains(const IpAddr& ip) const {
        if (ip.size != base.size) return false;
        int full = prefix_len / 8;
        if (full > 0 && std::memcmp(ip.bytes.data(), base.bytes.data(), static_cast<size_t>(full)) != 0)
            return false;
        int rem = prefix_len % 8;
        if (rem == 0) return true;
        uint8_t mask = static_cast<uint8_t>(0xFF << (8 - rem));
        return (ip.bytes[static_cast<size_t>(full)] & mask) == (base.bytes[static_cast<size_t>(full)] & mask);
    }

    // True when the two prefixes share any address (one contains the other).
    bool overlaps(const Cidr& other) const {
        if (base.size != other.base.size) return false;
        const Cidr& shorter = prefix_len <= other.prefix_len ? *this : other;
        const Cidr& longer = prefix_len <= other.prefix_len ? other : *this;
        return shorter.contains(longer.base);
    }

    std::string to_string() const {
        return base.to_string() + "/" + std::to_string(prefix_len);
    }
};

} // namespace wfp
