// packet.hpp - link/network/transport header decoding into PacketRecord
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wfp/capture.hpp"
#include "wfp/net.hpp"

namespace wfp {

enum class Transport : uint8_t { Tcp, Udp, Other };

inline const char* transport_name(Transport t) {
    switch (t) {
    case Transport::Tcp:   return "tcp";
    case Transport::Udp:   return "udp";
    case Transport::Other: return "other";
    }
    return "?";
}

namespace tcpflag {
constexpr uint8_t Fin = 0x01;
constexpr uint8_t Syn = 0x02;
constexpr uint8_t Rst = 0x04;
constexpr uint8_t Psh = 0x08;
constexpr uint8_t Ack = 0x10;
constexpr uint8_t Urg = 0x20;
} // namespace tcpflag

struct PacketRecord {
    double timestamp = 0.0;
    IpAddr src_addr;
    IpAddr dst_addr;
    uint16_t src_port = 0;
    uint16_t dst_port = 0;
    Transport transport = Transport::Other;
    uint32_t wire_len = 0;    // original length on the wire
    uint32_t payload_len = 0; // transport payload, from declared lengths
    uint8_t tcp_flags = 0;    // meaningful iff transport == Tcp
};

enum class DecodeStatus : uint8_t { Ok, Skip, Malformed };

struct DecodeResult {
    DecodeStatus status = DecodeStatus::Skip;
    PacketRecord packet;
};

namespace linktype {
constexpr uint16_t Ethernet = 1;
constexpr uint16_t RawIp = 101;
constexpr uint16_t LinuxSll = 113;
} // namespace linktype

namespace decode_detail {

constexpr uint16_t kEtherIpv4 = 0x0800;
constexpr uint16_t kEtherIpv6 = 0x86DD;
constexpr uint16_t kEtherVlan = 0x8100;
constexpr uint8_t kProtoTcp = 6;
constexpr uint8_t kProtoUdp = 17;

inline uint16_t be16(std::span<const uint8_t> b, size_t off) {
    return static_cast<uint16_t>(b[off] << 8 | b[off + 1]);
}

inline bool is_ipv6_extension(uint8_t next_header) {
    switch (next_header) {
    case 0: case 43: case 44: case 50: case 51: case 60:
    case 135: case 139: case 140: case 253: case 254:
        return true;
    default:
        return false;
    }
}

inline DecodeResult malformed() { return {DecodeStatus::Malformed, {}}; }
inline DecodeResult skip() { return {DecodeStatus::Skip, {}}; }

// Transport headers must be captured in full; the payload length comes from
// the declared IP/UDP lengths so snap-length truncation of the payload does
// not distort byte counts.
inline DecodeResult decode_transport(std::span<const uint8_t> f, size_t l4, uint8_t proto,
                                     uint32_t ip_payload, PacketRecord rec) {
    if (proto == kProtoTcp) {
        if (f.size() < l4 + 20) return malformed();
        uint8_t doff = static_cast<uint8_t>(f[l4 + 12] >> 4);
        if (doff < 5) return malformed();
        uint32_t hdr = static_cast<uint32_t>(doff) * 4;
        if (ip_payload < hdr) return malformed();
        rec.transport = Transport::Tcp;
        rec.src_port = be16(f, l4);
        rec.dst_port = be16(f, l4 + 2);
        rec.tcp_flags = f[l4 + 13];
        rec.payload_len = ip_payload - hdr;
        return {DecodeStatus::Ok, rec};
    }
    if (proto == kProtoUdp) {
        if (f.size() < l4 + 8) return malformed();
        uint16_t udp_len = be16(f, l4 + 4);
        if (udp_len < 8) return malformed();
        rec.transport = Transport::Udp;
        rec.src_port = be16(f, l4);
        rec.dst_port = be16(f, l4 + 2);
        rec.payload_len = udp_len - 8;
        return {DecodeStatus::Ok, rec};
    }
    rec.transport = Transport::Other;
    rec.payload_len = ip_payload;
    return {DecodeStatus::Ok, rec};
}

inline DecodeResult decode_ipv4(std::span<const uint8_t> f, size_t off) {
    if (f.size() < off + 20) return malformed();
    if (f[off] >> 4 != 4) return malformed();
    uint32_t ihl = static_cast<uint32_t>(f[off] & 0x0F) * 4;
    if (ihl < 20) return malformed();
    if (f.size() < off + ihl) return malformed();
    uint16_t total_len = be16(f, off + 2);
    if (total_len < ihl) return malformed();
    uint16_t frag_offset = static_cast<uint16_t>(be16(f, off + 6) & 0x1FFF);
    if (frag_offset > 0) return skip(); // non-first fragments carry no transport header
    PacketRecord rec;
    rec.src_addr = IpAddr::v4(f[off + 12], f[off + 13], f[off + 14], f[off + 15]);
    rec.dst_addr = IpAddr::v4(f[off + 16], f[off + 17], f[off + 18], f[off + 19]);
    rec.wire_len = static_cast<uint32_t>(f.size());
    return decode_transport(f, off + ihl, f[off + 9], total_len - ihl, rec);
}

inline DecodeResult decode_ipv6(std::span<const uint8_t> f, size_t off) {
    if (f.size() < off + 40) return malformed();
    if (f[off] >> 4 != 6) return malformed();
    uint16_t payload_len = be16(f, off + 4);
    uint8_t next = f[off + 6];
    if (is_ipv6_extension(next)) return skip(); // extension headers are not walked
    PacketRecord rec;
    rec.src_addr.size = 16;
    rec.dst_addr.size = 16;
    for (int i = 0; i < 16; ++i) {
        rec.src_addr.bytes[static_cast<size_t>(i)] = f[off + 8 + static_cast<size_t>(i)];
        rec.dst_addr.bytes[static_cast<size_t>(i)] = f[off + 24 + static_cast<size_t>(i)];
    }
    rec.wire_len = static_cast<uint32_t>(f.size());
    return decode_transport(f, off + 40, next, payload_len, rec);
}

} // namespace decode_detail

// Total over arbitrary bytes: yields a record, Skip, or Malformed.
inline DecodeResult decode_packet(std::span<const uint8_t> frame, uint16_t link_type) {
    using namespace decode_detail;
    size_t off = 0;
    uint16_t ethertype = 0;
    switch (link_type) {
    case linktype::Ethernet: {
        if (frame.size() < 14) return malformed();
        ethertype = be16(frame, 12);
        off = 14;
        if (ethertype == kEtherVlan) {
            if (frame.size() < 18) return malformed();
            ethertype = be16(frame, 16);
            off = 18;
            if (ethertype == kEtherVlan) return skip(); // QinQ out of scope
        }
        break;
    }
    case linktype::LinuxSll: {
        if (frame.size() < 16) return malformed();
        ethertype = be16(frame, 14);
        off = 16;
        break;
    }
    case linktype::RawIp: {
        if (frame.empty()) return malformed();
        uint8_t ver = static_cast<uint8_t>(frame[0] >> 4);
        if (ver == 4) ethertype = kEtherIpv4;
        else if (ver == 6) ethertype = kEtherIpv6;
        else return malformed();
        off = 0;
        break;
    }
    default:
        return skip();
    }
    if (ethertype == kEtherIpv4) return decode_ipv4(frame, off);
    if (ethertype == kEtherIpv6) return decode_ipv6(frame, off);
    return skip(); // ARP and other non-IP ethertypes
}

struct IngestCounters {
    uint64_t decoded = 0;
    uint64_t skipped = 0;
    uint64_t malformed = 0;
};

// Drains a capture into PacketRecords; timestamp and wire length come from
// the capture layer, everything else from the frame bytes.
inline std::vector<PacketRecord> ingest_packets(CaptureReader& reader, IngestCounters* counters = nullptr) {
    std::vector<PacketRecord> out;
    IngestCounters local;
    while (auto raw = reader.next()) {
        uint16_t lt = reader.info().interfaces.empty()
                          ? linktype::Ethernet
                          : reader.info().interfaces[raw->interface_index].link_type;
        DecodeResult dec = decode_packet(raw->data, lt);
        switch (dec.status) {
        case DecodeStatus::Ok:
            dec.packet.timestamp = raw->timestamp;
            dec.packet.wire_len = raw->orig_len;
            out.push_back(dec.packet);
            ++local.decoded;
            break;
        case DecodeStatus::Skip:
            ++local.skipped;
            break;
        case DecodeStatus::Malformed:
            ++local.malformed;
            break;
        }
    }
    if (counters) *counters = local;
    return out;
}

} // namespace wfp
