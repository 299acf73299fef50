// capture.hpp - pcapng / classic pcap container parsing
//
// Reads Section Header, Interface Description, Enhanced Packet and Simple
// Packet blocks plus classic pcap records, in either byte order. Unknown
// pcapng block types are skipped. Every block's trailing total-length is
// checked against the leading one.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wfp/bytes.hpp"
#include "wfp/errors.hpp"

namespace wfp {

enum class CaptureFormat : uint8_t { Pcapng, PcapMicro, PcapNano };

inline const char* capture_format_name(CaptureFormat f) {
    switch (f) {
    case CaptureFormat::Pcapng:    return "pcapng";
    case CaptureFormat::PcapMicro: return "pcap_us";
    case CaptureFormat::PcapNano:  return "pcap_ns";
    }
    return "unknown";
}

struct InterfaceInfo {
    uint16_t link_type = 1;
    double ts_resolution = 1e-6; // seconds per tick
    uint32_t snap_len = 0;       // 0 = unlimited
};

struct CaptureInfo {
    CaptureFormat format = CaptureFormat::Pcapng;
    ByteOrder byte_order = ByteOrder::Little;
    std::vector<InterfaceInfo> interfaces;
};

struct RawPacket {
    double timestamp = 0.0; // seconds since epoch (ticks * interface resolution)
    uint32_t interface_index = 0;
    uint32_t orig_len = 0; // length on the wire
    std::vector<uint8_t> data;
};

namespace pcap_detail {

constexpr uint32_t kShbType = 0x0A0D0D0A;
constexpr uint32_t kByteOrderMagic = 0x1A2B3C4D;
constexpr uint32_t kIdbType = 0x00000001;
constexpr uint32_t kSpbType = 0x00000003;
constexpr uint32_t kEpbType = 0x00000006;
constexpr uint32_t kPcapMagicMicro = 0xA1B2C3D4;
constexpr uint32_t kPcapMagicNano = 0xA1B23C4D;
constexpr uint16_t kOptEndOfOpt = 0;
constexpr uint16_t kOptIfTsResol = 9;

inline uint32_t be32_at(std::span<const uint8_t> b, size_t off) {
    return static_cast<uint32_t>(b[off]) << 24 | static_cast<uint32_t>(b[off + 1]) << 16 |
           static_cast<uint32_t>(b[off + 2]) << 8 | static_cast<uint32_t>(b[off + 3]);
}

} // namespace pcap_detail

struct DetectedFormat {
    CaptureFormat format;
    ByteOrder byte_order;
};

// Format comes from the leading magic alone, never the file name. For pcapng
// the byte order lives in the byte-order magic at offset 8; when fewer than
// 12 bytes are supplied the reader settles it from the full SHB later.
inline DetectedFormat detect_format(std::span<const uint8_t> leading) {
    using namespace pcap_detail;
    if (leading.size() < 4) raise(Errc::TruncatedBlock, "need at least 4 bytes to detect format");
    uint32_t be = be32_at(leading, 0);
    if (be == kShbType) {
        ByteOrder order = ByteOrder::Little;
        if (leading.size() >= 12 && be32_at(leading, 8) == kByteOrderMagic)
            order = ByteOrder::Big;
        return {CaptureFormat::Pcapng, order};
    }
    if (be == kPcapMagicMicro) return {CaptureFormat::PcapMicro, ByteOrder::Big};
    if (be == kPcapMagicNano) return {CaptureFormat::PcapNano, ByteOrder::Big};
    uint32_t le = __builtin_bswap32(be);
    if (le == kPcapMagicMicro) return {CaptureFormat::PcapMicro, ByteOrder::Little};
    if (le == kPcapMagicNano) return {CaptureFormat::PcapNano, ByteOrder::Little};
    raise(Errc::UnknownMagic, "not a pcapng or pcap capture");
}

// Streaming reader over an in-memory capture. next() yields packets in file
// order and throws Error on structural violations, so a truncated file is
// either a shorter valid stream or a TruncatedBlock.
class CaptureReader {
public:
    explicit CaptureReader(std::vector<uint8_t> contents) : buf_(std::move(contents)) {
        auto det = detect_format(buf_);
        info_.format = det.format;
        info_.byte_order = det.byte_order;
        if (info_.format != CaptureFormat::Pcapng) read_pcap_header();
    }

    static CaptureReader open(const std::string& path) {
        return CaptureReader(read_file_bytes(path));
    }

    const CaptureInfo& info() const { return info_; }

    std::optional<RawPacket> next() {
        return info_.format == CaptureFormat::Pcapng ? next_pcapng() : next_pcap();
    }

    std::vector<RawPacket> read_all() {
        std::vector<RawPacket> out;
        while (auto p = next()) out.push_back(std::move(*p));
        return out;
    }

private:
    std::span<const uint8_t> buf_span() const { return {buf_.data(), buf_.size()}; }

    void read_pcap_header() {
        ByteReader r(buf_, info_.byte_order);
        if (!r.can_read(24)) raise(Errc::TruncatedBlock, "classic pcap header shorter than 24 bytes");
        r.skip(4); // magic
        r.skip(2 + 2 + 4 + 4); // version, thiszone, sigfigs
        uint32_t snaplen = r.u32();
        uint32_t link = r.u32();
        InterfaceInfo iface;
        iface.link_type = static_cast<uint16_t>(link & 0xFFFF);
        iface.snap_len = snaplen;
        iface.ts_resolution = info_.format == CaptureFormat::PcapNano ? 1e-9 : 1e-6;
        info_.interfaces.push_back(iface);
        pos_ = 24;
    }

    std::optional<RawPacket> next_pcap() {
        if (pos_ >= buf_.size()) return std::nullopt;
        ByteReader r(buf_span().subspan(pos_), info_.byte_order);
        if (!r.can_read(16)) raise(Errc::TruncatedBlock, "partial pcap record header");
        uint64_t sec = r.u32();
        uint64_t frac = r.u32();
        uint32_t incl_len = r.u32();
        uint32_t orig_len = r.u32();
        if (!r.can_read(incl_len)) raise(Errc::TruncatedBlock, "pcap record data past end of file");
        auto data = r.bytes(incl_len);
        pos_ += 16 + incl_len;
        uint64_t per_sec = info_.format == CaptureFormat::PcapNano ? 1000000000ull : 1000000ull;
        RawPacket pkt;
        pkt.timestamp = static_cast<double>(sec * per_sec + frac) * info_.interfaces[0].ts_resolution;
        pkt.interface_index = 0;
        pkt.orig_len = orig_len;
        pkt.data.assign(data.begin(), data.end());
        return pkt;
    }

    std::optional<RawPacket> next_pcapng() {
        using namespace pcap_detail;
        while (pos_ < buf_.size()) {
            size_t remaining = buf_.size() - pos_;
            if (remaining < 8) raise(Errc::TruncatedBlock, "partial pcapng block header");
            uint32_t type_be = be32_at(buf_span(), pos_);
            if (type_be == kShbType) read_section_order();
            ByteReader hdr(buf_span().subspan(pos_), info_.byte_order);
            hdr.skip(4);
            uint32_t blen = hdr.u32();
            if (blen < 12 || blen % 4 != 0)
                raise(Errc::LengthMismatch, "pcapng block length " + std::to_string(blen) + " is invalid");
            if (blen > remaining) raise(Errc::TruncatedBlock, "pcapng block extends past end of file");
            ByteReader body(buf_span().subspan(pos_ + 8, blen - 12), info_.byte_order);
            ByteReader tail(buf_span().subspan(pos_ + blen - 4, 4), info_.byte_order);
            if (tail.u32() != blen)
                raise(Errc::LengthMismatch, "pcapng trailing block length disagrees with leading");
            uint32_t type = type_be;
            if (info_.byte_order == ByteOrder::Little) type = __builtin_bswap32(type_be);
            pos_ += blen;
            switch (type) {
            case kShbType:
                info_.interfaces.clear(); // new section: interface table restarts
                break;
            case kIdbType:
                read_idb(body);
                break;
            case kEpbType:
                return read_epb(body);
            case kSpbType:
                return read_spb(body, blen);
            default:
                break; // name resolution, statistics, vendor blocks: skipped
            }
        }
        return std::nullopt;
    }

    // The SHB's byte-order magic governs every field of the section,
    // including the SHB's own block length.
    void read_section_order() {
        using namespace pcap_detail;
        if (buf_.size() - pos_ < 12) raise(Errc::TruncatedBlock, "partial section header block");
        uint32_t bom_be = be32_at(buf_span(), pos_ + 8);
        if (bom_be == kByteOrderMagic)
            info_.byte_order = ByteOrder::Big;
        else if (__builtin_bswap32(bom_be) == kByteOrderMagic)
            info_.byte_order = ByteOrder::Little;
        else
            raise(Errc::UnknownMagic, "bad pcapng byte-order magic");
    }

    void read_idb(ByteReader& body) {
        using namespace pcap_detail;
        InterfaceInfo iface;
        if (!body.can_read(8)) raise(Errc::TruncatedBlock, "interface block shorter than fixed fields");
        iface.link_type = body.u16();
        body.skip(2); // reserved
        iface.snap_len = body.u32();
        while (body.can_read(4)) {
            uint16_t code = body.u16();
            uint16_t len = body.u16();
            if (code == kOptEndOfOpt) break;
            size_t padded = (static_cast<size_t>(len) + 3) & ~size_t{3};
            if (!body.can_read(padded)) break;
            auto value = body.bytes(padded);
            if (code == kOptIfTsResol && len == 1) {
                uint8_t v = value[0];
                if (v & 0x80)
                    iface.ts_resolution = std::pow(2.0, -static_cast<double>(v & 0x7F));
                else
                    iface.ts_resolution = std::pow(10.0, -static_cast<double>(v));
            }
        }
        info_.interfaces.push_back(iface);
    }

    RawPacket read_epb(ByteReader& body) {
        if (!body.can_read(20)) raise(Errc::TruncatedBlock, "enhanced packet block shorter than fixed fields");
        uint32_t iface_idx = body.u32();
        uint64_t ts_high = body.u32();
        uint64_t ts_low = body.u32();
        uint32_t cap_len = body.u32();
        uint32_t orig_len = body.u32();
        if (iface_idx >= info_.interfaces.size())
            raise(Errc::MissingInterface, "packet references interface " + std::to_string(iface_idx) +
                                              " of " + std::to_string(info_.interfaces.size()));
        if (!body.can_read(cap_len)) raise(Errc::TruncatedBlock, "packet data exceeds block body");
        auto data = body.bytes(cap_len);
        RawPacket pkt;
        uint64_t ticks = ts_high << 32 | ts_low;
        pkt.timestamp = static_cast<double>(ticks) * info_.interfaces[iface_idx].ts_resolution;
        pkt.interface_index = iface_idx;
        pkt.orig_len = orig_len;
        pkt.data.assign(data.begin(), data.end());
        return pkt;
    }

    // Simple packet blocks carry no timestamp or interface id; they belong
    // to the section's single interface.
    RawPacket read_spb(ByteReader& body, uint32_t blen) {
        if (info_.interfaces.empty())
            raise(Errc::MissingInterface, "simple packet block before any interface block");
        if (!body.can_read(4)) raise(Errc::TruncatedBlock, "simple packet block shorter than fixed fields");
        uint32_t orig_len = body.u32();
        uint32_t field_len = blen - 16;
        uint32_t cap_len = std::min(orig_len, field_len);
        uint32_t snap = info_.interfaces[0].snap_len;
        if (snap > 0) cap_len = std::min(cap_len, snap);
        if (!body.can_read(cap_len)) raise(Errc::TruncatedBlock, "packet data exceeds block body");
        auto data = body.bytes(cap_len);
        RawPacket pkt;
        pkt.timestamp = 0.0;
        pkt.interface_index = 0;
        pkt.orig_len = orig_len;
        pkt.data.assign(data.begin(), data.end());
        return pkt;
    }

    std::vector<uint8_t> buf_;
    CaptureInfo info_;
    size_t pos_ = 0;
};

} // namespace wfp
