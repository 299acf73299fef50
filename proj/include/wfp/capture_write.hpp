// capture_write.hpp - pcapng / classic pcap emission for the traffic generator
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wfp/bytes.hpp"
#include "wfp/capture.hpp"
#include "wfp/net.hpp"
#include "wfp/packet.hpp"

namespace wfp {

// In-memory capture builder. Timestamps are tick counts in the writer's
// resolution: 10^-tsresol_pow10 seconds for pcapng, microseconds for the
// classic pcap variant with the A1B2C3D4 magic, nanoseconds for A1B23C4D.
class CaptureWriter {
public:
    CaptureWriter(CaptureFormat format, ByteOrder order, uint16_t link_type = linktype::Ethernet,
                  uint8_t tsresol_pow10 = 6, uint32_t snap_len = 262144)
        : format_(format), link_type_(link_type), tsresol_pow10_(tsresol_pow10),
          snap_len_(snap_len), w_(order) {
        using namespace pcap_detail;
        if (format_ == CaptureFormat::Pcapng) {
            // SHB: no options
            w_.u32(kShbType);
            w_.u32(28);
            w_.u32(kByteOrderMagic);
            w_.u16(1); // major
            w_.u16(0); // minor
            w_.u64(0xFFFFFFFFFFFFFFFFull); // section length unknown
            w_.u32(28);
            // IDB with an explicit if_tsresol option
            w_.u32(kIdbType);
            w_.u32(32);
            w_.u16(link_type_);
            w_.u16(0);
            w_.u32(snap_len_);
            w_.u16(kOptIfTsResol);
            w_.u16(1);
            w_.u8(tsresol_pow10_);
            w_.u8(0);
            w_.u8(0);
            w_.u8(0);
            w_.u16(kOptEndOfOpt);
            w_.u16(0);
            w_.u32(32);
        } else {
            w_.u32(format_ == CaptureFormat::PcapNano ? kPcapMagicNano : kPcapMagicMicro);
            w_.u16(2); // version 2.4
            w_.u16(4);
            w_.u32(0); // thiszone
            w_.u32(0); // sigfigs
            w_.u32(snap_len_);
            w_.u32(link_type_);
        }
    }

    double tick_resolution() const {
        if (format_ == CaptureFormat::PcapMicro) return 1e-6;
        if (format_ == CaptureFormat::PcapNano) return 1e-9;
        return std::pow(10.0, -static_cast<double>(tsresol_pow10_));
    }

    void add_packet(uint64_t ticks, std::span<const uint8_t> frame) {
        add_packet(ticks, frame, static_cast<uint32_t>(frame.size()));
    }

    void add_packet(uint64_t ticks, std::span<const uint8_t> frame, uint32_t orig_len) {
        using namespace pcap_detail;
        uint32_t cap = static_cast<uint32_t>(frame.size());
        if (format_ == CaptureFormat::Pcapng) {
            uint32_t padded = (cap + 3u) & ~3u;
            uint32_t blen = 32 + padded;
            w_.u32(kEpbType);
            w_.u32(blen);
            w_.u32(0); // interface 0
            w_.u32(static_cast<uint32_t>(ticks >> 32));
            w_.u32(static_cast<uint32_t>(ticks));
            w_.u32(cap);
            w_.u32(orig_len);
            w_.bytes(frame);
            w_.pad_to_32bit();
            w_.u32(blen);
        } else {
            uint64_t per_sec = format_ == CaptureFormat::PcapNano ? 1000000000ull : 1000000ull;
            w_.u32(static_cast<uint32_t>(ticks / per_sec));
            w_.u32(static_cast<uint32_t>(ticks % per_sec));
            w_.u32(cap);
            w_.u32(orig_len);
            w_.bytes(frame);
        }
    }

    // pcapng only: a Simple Packet Block (no timestamp, section interface).
    void add_simple_packet(std::span<const uint8_t> frame) {
        using namespace pcap_detail;
        uint32_t cap = static_cast<uint32_t>(frame.size());
        uint32_t padded = (cap + 3u) & ~3u;
        uint32_t blen = 16 + padded;
        w_.u32(kSpbType);
        w_.u32(blen);
        w_.u32(cap);
        w_.bytes(frame);
        w_.pad_to_32bit();
        w_.u32(blen);
    }

    const std::vector<uint8_t>& bytes() const { return w_.data(); }

    void save(const std::string& path) const { write_file_bytes(path, w_.data()); }

private:
    CaptureFormat format_;
    uint16_t link_type_;
    uint8_t tsresol_pow10_;
    uint32_t snap_len_;
    ByteWriter w_;
};

// Minimal Ethernet/IPv4 frame builders used by the generator and tests.
namespace frames {

inline void push_be16(std::vector<uint8_t>& v, uint16_t x) {
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x));
}

inline std::vector<uint8_t> ethernet_ipv4(uint8_t proto, const IpAddr& src, const IpAddr& dst,
                                          std::span<const uint8_t> ip_payload) {
    std::vector<uint8_t> f;
    f.reserve(34 + ip_payload.size());
    for (int i = 0; i < 6; ++i) f.push_back(0x02); // dst mac
    for (int i = 0; i < 6; ++i) f.push_back(0x04); // src mac
    push_be16(f, 0x0800);
    uint16_t total = static_cast<uint16_t>(20 + ip_payload.size());
    f.push_back(0x45); // version 4, ihl 5
    f.push_back(0);
    push_be16(f, total);
    push_be16(f, 0); // identification
    push_be16(f, 0x4000); // don't fragment
    f.push_back(64); // ttl
    f.push_back(proto);
    push_be16(f, 0); // checksum left zero; decoding does not verify it
    for (int i = 0; i < 4; ++i) f.push_back(src.bytes[static_cast<size_t>(i)]);
    for (int i = 0; i < 4; ++i) f.push_back(dst.bytes[static_cast<size_t>(i)]);
    f.insert(f.end(), ip_payload.begin(), ip_payload.end());
    return f;
}

inline std::vector<uint8_t> tcp_segment(const IpAddr& src, const IpAddr& dst, uint16_t sport,
                                        uint16_t dport, uint8_t flags, uint32_t seq,
                                        size_t payload_bytes) {
    std::vector<uint8_t> seg;
    seg.reserve(20 + payload_bytes);
    push_be16(seg, sport);
    push_be16(seg, dport);
    for (int i = 3; i >= 0; --i) seg.push_back(static_cast<uint8_t>(seq >> (8 * i)));
    for (int i = 0; i < 4; ++i) seg.push_back(0); // ack number
    seg.push_back(0x50); // data offset 5
    seg.push_back(flags);
    push_be16(seg, 0xFFFF); // window
    push_be16(seg, 0);      // checksum
    push_be16(seg, 0);      // urgent
    for (size_t i = 0; i < payload_bytes; ++i) seg.push_back(static_cast<uint8_t>(i * 31 + 7));
    return ethernet_ipv4(6, src, dst, seg);
}

inline std::vector<uint8_t> udp_datagram(const IpAddr& src, const IpAddr& dst, uint16_t sport,
                                         uint16_t dport, size_t payload_bytes) {
    std::vector<uint8_t> seg;
    seg.reserve(8 + payload_bytes);
    push_be16(seg, sport);
    push_be16(seg, dport);
    push_be16(seg, static_cast<uint16_t>(8 + payload_bytes));
    push_be16(seg, 0); // checksum
    for (size_t i = 0; i < payload_bytes; ++i) seg.push_back(static_cast<uint8_t>(i * 17 + 3));
    return ethernet_ipv4(17, src, dst, seg);
}

} // namespace frames

} // namespace wfp
