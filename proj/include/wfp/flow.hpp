// flow.hpp - bidirectional flow assembly over decoded packets
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "wfp/csv.hpp"
#include "wfp/errors.hpp"
#include "wfp/net.hpp"
#include "wfp/packet.hpp"

namespace wfp {

// Five-tuple with endpoints in canonical order, so both directions of a
// conversation map to the same key.
struct FlowKey {
    IpAddr addr_a;
    uint16_t port_a = 0;
    IpAddr addr_b;
    uint16_t port_b = 0;
    Transport transport = Transport::Tcp;

    static FlowKey canonical(const PacketRecord& p) {
        FlowKey k;
        k.transport = p.transport;
        bool src_first = std::tie(p.src_addr, p.src_port) <= std::tie(p.dst_addr, p.dst_port);
        if (src_first) {
            k.addr_a = p.src_addr;
            k.port_a = p.src_port;
            k.addr_b = p.dst_addr;
            k.port_b = p.dst_port;
        } else {
            k.addr_a = p.dst_addr;
            k.port_a = p.dst_port;
            k.addr_b = p.src_addr;
            k.port_b = p.src_port;
        }
        return k;
    }

    bool operator==(const FlowKey&) const = default;
    auto operator<=>(const FlowKey& rhs) const {
        return std::tie(addr_a, port_a, addr_b, port_b, transport) <=>
               std::tie(rhs.addr_a, rhs.port_a, rhs.addr_b, rhs.port_b, rhs.transport);
    }
};

struct Endpoint {
    IpAddr addr;
    uint16_t port = 0;
    bool operator==(const Endpoint&) const = default;
};

enum class Termination : uint8_t { IdleTimeout, ActiveTimeout, TcpClose, EndOfCapture };

inline const char* termination_name(Termination t) {
    switch (t) {
    case Termination::IdleTimeout:  return "idle_timeout";
    case Termination::ActiveTimeout: return "active_timeout";
    case Termination::TcpClose:     return "tcp_close";
    case Termination::EndOfCapture: return "end_of_capture";
    }
    return "?";
}

struct Flow {
    FlowKey key;
    Endpoint initiator; // source of the flow's first packet; defines forward
    double first_ts = 0.0;
    double last_ts = 0.0;
    uint64_t fwd_packets = 0;
    uint64_t bwd_packets = 0;
    uint64_t fwd_bytes = 0; // wire bytes
    uint64_t bwd_bytes = 0;
    uint64_t fwd_payload_bytes = 0;
    uint64_t bwd_payload_bytes = 0;
    Termination termination = Termination::EndOfCapture;

    bool operator==(const Flow&) const = default;
};

struct AssembleConfig {
    double idle_timeout = 120.0;
    double active_timeout = 3600.0;
    bool honor_tcp_close = true;
};

struct AssembleResult {
    std::vector<Flow> flows;
    uint64_t dropped_packets = 0; // transport OTHER
};

namespace flow_detail {

struct OpenFlow {
    Flow flow;
    bool fin_fwd = false;
    bool fin_bwd = false;
};

inline void add_packet(OpenFlow& of, const PacketRecord& p) {
    bool forward = p.src_addr == of.flow.initiator.addr && p.src_port == of.flow.initiator.port;
    if (forward) {
        of.flow.fwd_packets += 1;
        of.flow.fwd_bytes += p.wire_len;
        of.flow.fwd_payload_bytes += p.payload_len;
    } else {
        of.flow.bwd_packets += 1;
        of.flow.bwd_bytes += p.wire_len;
        of.flow.bwd_payload_bytes += p.payload_len;
    }
    of.flow.first_ts = std::min(of.flow.first_ts, p.timestamp);
    of.flow.last_ts = std::max(of.flow.last_ts, p.timestamp);
    if (p.transport == Transport::Tcp && (p.tcp_flags & tcpflag::Fin)) {
        if (forward) of.fin_fwd = true;
        else of.fin_bwd = true;
    }
}

inline OpenFlow open_flow(const FlowKey& key, const PacketRecord& p) {
    OpenFlow of;
    of.flow.key = key;
    of.flow.initiator = {p.src_addr, p.src_port};
    of.flow.first_ts = p.timestamp;
    of.flow.last_ts = p.timestamp;
    add_packet(of, p);
    return of;
}

// closed by FIN-from-both or any RST, when honored
inline bool tcp_closed(const OpenFlow& of, const PacketRecord& p, bool honor) {
    if (!honor || p.transport != Transport::Tcp) return false;
    if (p.tcp_flags & tcpflag::Rst) return true;
    return of.fin_fwd && of.fin_bwd;
}

} // namespace flow_detail

// Stateful fold over one packet stream. A packet joins its key's open flow
// when the idle gap and total age stay within the timeouts; otherwise the
// old flow is emitted and a fresh one opened. Emission order is by flow
// first_ts, ties by canonical key.
inline AssembleResult assemble(std::span<const PacketRecord> packets, const AssembleConfig& cfg = {}) {
    using flow_detail::OpenFlow;
    AssembleResult result;
    std::map<FlowKey, OpenFlow> open;
    auto emit = [&](OpenFlow&& of, Termination t) {
        of.flow.termination = t;
        result.flows.push_back(of.flow);
    };
    for (const PacketRecord& p : packets) {
        if (p.transport == Transport::Other) {
            ++result.dropped_packets;
            continue;
        }
        FlowKey key = FlowKey::canonical(p);
        auto it = open.find(key);
        if (it != open.end()) {
            double gap = p.timestamp - it->second.flow.last_ts;
            double age = p.timestamp - it->second.flow.first_ts;
            if (gap > cfg.idle_timeout || age > cfg.active_timeout) {
                Termination t = gap > cfg.idle_timeout ? Termination::IdleTimeout
                                                       : Termination::ActiveTimeout;
                emit(std::move(it->second), t);
                it->second = flow_detail::open_flow(key, p);
            } else {
                flow_detail::add_packet(it->second, p);
            }
        } else {
            it = open.emplace(key, flow_detail::open_flow(key, p)).first;
        }
        if (flow_detail::tcp_closed(it->second, p, cfg.honor_tcp_close)) {
            emit(std::move(it->second), Termination::TcpClose);
            open.erase(it);
        }
    }
    for (auto& [key, of] : open) emit(std::move(of), Termination::EndOfCapture);
    std::sort(result.flows.begin(), result.flows.end(), [](const Flow& a, const Flow& b) {
        if (a.first_ts != b.first_ts) return a.first_ts < b.first_ts;
        return a.key < b.key;
    });
    return result;
}

// --- campaign statistics -------------------------------------------------

struct DayStat {
    std::string date; // YYYY-MM-DD, UTC
    uint64_t packets = 0;
    uint64_t flows = 0;
};

struct FlowStats {
    uint64_t packet_total = 0;
    uint64_t flow_total = 0;
    std::vector<DayStat> per_day;
};

namespace flow_detail {

// Howard Hinnant's civil-from-days.
inline std::tuple<int64_t, unsigned, unsigned> civil_from_days(int64_t z) {
    z += 719468;
    int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    uint64_t doe = static_cast<uint64_t>(z - era * 146097);
    uint64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    int64_t y = static_cast<int64_t>(yoe) + era * 400;
    uint64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    uint64_t mp = (5 * doy + 2) / 153;
    uint64_t d = doy - (153 * mp + 2) / 5 + 1;
    uint64_t m = mp < 10 ? mp + 3 : mp - 9;
    return {y + (m <= 2), static_cast<unsigned>(m), static_cast<unsigned>(d)};
}

inline std::string utc_date(double ts) {
    int64_t days = static_cast<int64_t>(ts / 86400.0);
    auto [y, m, d] = civil_from_days(days);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u", static_cast<long long>(y), m, d);
    return buf;
}

} // namespace flow_detail

inline FlowStats flow_stats(std::span<const Flow> flows) {
    FlowStats s;
    std::map<std::string, DayStat> days;
    for (const Flow& f : flows) {
        uint64_t pkts = f.fwd_packets + f.bwd_packets;
        s.packet_total += pkts;
        s.flow_total += 1;
        std::string date = flow_detail::utc_date(f.first_ts);
        auto& d = days[date];
        d.date = date;
        d.packets += pkts;
        d.flows += 1;
    }
    for (auto& [_, d] : days) s.per_day.push_back(d);
    return s;
}

inline std::string format_stats_table(const FlowStats& s) {
    std::string out = "Time          Packet number   Flow number\n";
    char line[96];
    for (const auto& d : s.per_day) {
        std::snprintf(line, sizeof(line), "%-12s %14llu %13llu\n", d.date.c_str(),
                      static_cast<unsigned long long>(d.packets),
                      static_cast<unsigned long long>(d.flows));
        out += line;
    }
    std::snprintf(line, sizeof(line), "%-12s %14llu %13llu\n", "Total",
                  static_cast<unsigned long long>(s.packet_total),
                  static_cast<unsigned long long>(s.flow_total));
    out += line;
    return out;
}

// --- CSV dump ------------------------------------------------------------

inline const char* kFlowCsvHeader =
    "addr_a,port_a,addr_b,port_b,transport,initiator_addr,initiator_port,"
    "first_ts,last_ts,fwd_packets,bwd_packets,fwd_bytes,bwd_bytes,"
    "fwd_payload_bytes,bwd_payload_bytes,termination";

inline std::string flows_to_csv(std::span<const Flow> flows) {
    std::string out = std::string(kFlowCsvHeader) + "\r\n";
    for (const Flow& f : flows) {
        std::vector<std::string> fields = {
            f.key.addr_a.to_string(),
            std::to_string(f.key.port_a),
            f.key.addr_b.to_string(),
            std::to_string(f.key.port_b),
            transport_name(f.key.transport),
            f.initiator.addr.to_string(),
            std::to_string(f.initiator.port),
            csv::format_double(f.first_ts),
            csv::format_double(f.last_ts),
            std::to_string(f.fwd_packets),
            std::to_string(f.bwd_packets),
            std::to_string(f.fwd_bytes),
            std::to_string(f.bwd_bytes),
            std::to_string(f.fwd_payload_bytes),
            std::to_string(f.bwd_payload_bytes),
            termination_name(f.termination),
        };
        out += csv::join_row(fields);
    }
    return out;
}

inline std::vector<Flow> flows_from_csv(const std::string& text) {
    auto rows = csv::parse(text);
    if (rows.empty()) raise(Errc::EmptyFile, "flow CSV has no header");
    if (csv::join_row(rows[0]) != std::string(kFlowCsvHeader) + "\r\n")
        raise(Errc::HeaderMismatch, "flow CSV header differs from the documented layout");
    std::vector<Flow> flows;
    for (size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() != 16)
            raise(Errc::HeaderMismatch, "flow CSV row " + std::to_string(i) + " has " +
                                            std::to_string(r.size()) + " fields");
        Flow f;
        auto addr_a = IpAddr::parse(r[0]);
        auto addr_b = IpAddr::parse(r[2]);
        auto init = IpAddr::parse(r[5]);
        if (!addr_a || !addr_b || !init)
            raise(Errc::HeaderMismatch, "bad address in flow CSV row " + std::to_string(i));
        f.key.addr_a = *addr_a;
        f.key.port_a = static_cast<uint16_t>(std::stoul(r[1]));
        f.key.addr_b = *addr_b;
        f.key.port_b = static_cast<uint16_t>(std::stoul(r[3]));
        f.key.transport = r[4] == "tcp" ? Transport::Tcp : Transport::Udp;
        f.initiator = {*init, static_cast<uint16_t>(std::stoul(r[6]))};
        f.first_ts = csv::parse_double(r[7]).value_or(0.0);
        f.last_ts = csv::parse_double(r[8]).value_or(0.0);
        f.fwd_packets = std::stoull(r[9]);
        f.bwd_packets = std::stoull(r[10]);
        f.fwd_bytes = std::stoull(r[11]);
        f.bwd_bytes = std::stoull(r[12]);
        f.fwd_payload_bytes = std::stoull(r[13]);
        f.bwd_payload_bytes = std::stoull(r[14]);
        if (r[15] == "idle_timeout") f.termination = Termination::IdleTimeout;
        else if (r[15] == "active_timeout") f.termination = Termination::ActiveTimeout;
        else if (r[15] == "tcp_close") f.termination = Termination::TcpClose;
        else f.termination = Termination::EndOfCapture;
        flows.push_back(f);
    }
    return flows;
}

} // namespace wfp
