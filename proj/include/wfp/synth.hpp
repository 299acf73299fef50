// synth.hpp - synthetic closed-world traffic with known ground truth
//
// Two generators: whole pcapng/pcap captures built from TCP conversation
// anatomy (handshake, data, FIN teardown), and labeled datasets sampled
// straight from per-site feature distributions. Both are pure functions of
// their seed.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wfp/capture_write.hpp"
#include "wfp/dataset.hpp"
#include "wfp/features.hpp"
#include "wfp/flow.hpp"
#include "wfp/rng.hpp"

namespace wfp {

struct SiteProfile {
    std::string site_label;
    std::vector<IpAddr> addresses;
    bool targeted = true;
    uint32_t flows_per_visit_min = 1;
    uint32_t flows_per_visit_max = 3;
    // per-flow quantity distributions: log-normal bytes and durations,
    // Poisson-like data packet counts
    double log_duration_mu = -1.0;
    double log_duration_sigma = 0.10;
    double log_fwd_bytes_mu = 9.0;
    double log_fwd_bytes_sigma = 0.12;
    double log_bwd_bytes_mu = 10.5;
    double log_bwd_bytes_sigma = 0.12;
    double fwd_packet_rate = 30.0;
    double bwd_packet_rate = 45.0;
    double noise_scale = 1.0;
};

// Identical base parameters across sites: the dataset generator's
// separability shifts are then the only class signal.
inline std::vector<SiteProfile> default_profiles(size_t targeted, size_t untargeted,
                                                 uint64_t seed) {
    std::vector<SiteProfile> profiles;
    Rng rng = Rng::derive(seed, 0xDEF);
    for (size_t i = 0; i < targeted + untargeted; ++i) {
        SiteProfile p;
        char name[32];
        std::snprintf(name, sizeof(name), "site%02u", static_cast<unsigned>(i));
        p.site_label = name;
        p.targeted = i < targeted;
        uint8_t octet = static_cast<uint8_t>(i + 1);
        p.addresses = {IpAddr::v4(198, 18, octet, 1), IpAddr::v4(198, 18, octet, 2)};
        p.flows_per_visit_min = 1;
        p.flows_per_visit_max = static_cast<uint32_t>(2 + rng.below(3));
        profiles.push_back(std::move(p));
    }
    return profiles;
}

struct SynthCaptureOptions {
    CaptureFormat format = CaptureFormat::Pcapng;
    ByteOrder byte_order = ByteOrder::Little;
};

struct SynthCapture {
    std::vector<uint8_t> capture_bytes;
    std::string monitored_list_text; // targeted profiles only
    std::string truth_csv;           // flow_index,site_label ("" = untargeted)
    size_t flow_count = 0;
    size_t packet_count = 0;
};

namespace synth_detail {

struct Conversation {
    uint64_t first_us = 0;
    FlowKey key;
    std::string site_label; // empty for untargeted sites
};

struct TimedFrame {
    uint64_t us;
    size_t order; // insertion index, stabilizes equal timestamps
    std::vector<uint8_t> frame;
};

inline std::vector<size_t> chunk_sizes(Rng& rng, double log_mu, double log_sigma,
                                       double packet_rate) {
    double total = rng.lognormal(log_mu, log_sigma);
    size_t bytes = static_cast<size_t>(std::clamp(total, 60.0, 400000.0));
    size_t packets = static_cast<size_t>(1 + rng.poisson(packet_rate));
    std::vector<size_t> chunks(packets, 0);
    size_t base = bytes / packets;
    for (size_t i = 0; i < packets; ++i) chunks[i] = std::min<size_t>(base, 1400);
    chunks[packets - 1] += std::min<size_t>(bytes - base * packets, 1400);
    return chunks;
}

} // namespace synth_detail

// Emits one valid capture (SHB + IDB + EPBs for pcapng) whose TCP
// conversations carry unique ephemeral five-tuples, so flow assembly
// recovers exactly one flow per conversation under any close policy.
inline SynthCapture generate_capture(std::span<const SiteProfile> profiles, size_t visits,
                                     uint64_t seed, const SynthCaptureOptions& opt = {}) {
    using namespace synth_detail;
    if (profiles.empty()) throw std::invalid_argument("need at least one site profile");
    if (visits == 0) throw std::invalid_argument("need at least one visit");
    Rng rng(seed);

    std::vector<IpAddr> clients;
    for (int i = 0; i < 48; ++i)
        clients.push_back(IpAddr::v4(10, 0, static_cast<uint8_t>(i / 16),
                                     static_cast<uint8_t>(i % 16 + 10)));

    std::vector<TimedFrame> frames_out;
    std::vector<Conversation> conversations;
    uint64_t clock_us = 1700000000ull * 1000000ull; // epoch-scale start
    uint32_t ephemeral = 20000;

    for (size_t visit = 0; visit < visits; ++visit) {
        for (const SiteProfile& site : profiles) {
            uint32_t span = site.flows_per_visit_max - site.flows_per_visit_min + 1;
            size_t nflows = site.flows_per_visit_min + rng.below(span);
            for (size_t fl = 0; fl < nflows; ++fl) {
                IpAddr server = site.addresses[rng.below(site.addresses.size())];
                IpAddr client = clients[rng.below(clients.size())];
                uint16_t sport = static_cast<uint16_t>(ephemeral);
                ephemeral = ephemeral >= 59999 ? 20000 : ephemeral + 1;
                constexpr uint16_t dport = 443;

                double duration = std::clamp(
                    rng.lognormal(site.log_duration_mu, site.log_duration_sigma * site.noise_scale),
                    0.002, 60.0);
                auto fwd_chunks = chunk_sizes(rng, site.log_fwd_bytes_mu,
                                              site.log_fwd_bytes_sigma * site.noise_scale,
                                              site.fwd_packet_rate);
                auto bwd_chunks = chunk_sizes(rng, site.log_bwd_bytes_mu,
                                              site.log_bwd_bytes_sigma * site.noise_scale,
                                              site.bwd_packet_rate);

                struct Seg {
                    bool fwd;
                    uint8_t flags;
                    size_t payload;
                };
                std::vector<Seg> segs = {{true, tcpflag::Syn, 0},
                                         {false, tcpflag::Syn | tcpflag::Ack, 0},
                                         {true, tcpflag::Ack, 0}};
                size_t fi = 0, bi = 0;
                while (fi < fwd_chunks.size() || bi < bwd_chunks.size()) {
                    size_t remaining_f = fwd_chunks.size() - fi;
                    size_t remaining_b = bwd_chunks.size() - bi;
                    bool pick_fwd = rng.below(remaining_f + remaining_b) < remaining_f;
                    if (pick_fwd)
                        segs.push_back({true, static_cast<uint8_t>(tcpflag::Ack | tcpflag::Psh),
                                        fwd_chunks[fi++]});
                    else
                        segs.push_back({false, static_cast<uint8_t>(tcpflag::Ack | tcpflag::Psh),
                                        bwd_chunks[bi++]});
                }
                // teardown stops at the second FIN: the flow closes there
                segs.push_back({true, static_cast<uint8_t>(tcpflag::Fin | tcpflag::Ack), 0});
                segs.push_back({false, static_cast<uint8_t>(tcpflag::Fin | tcpflag::Ack), 0});

                uint64_t start_us = clock_us;
                uint64_t dur_us = static_cast<uint64_t>(duration * 1e6);
                uint32_t seq_f = 1000, seq_b = 5000;
                for (size_t s = 0; s < segs.size(); ++s) {
                    uint64_t at = start_us + dur_us * s / (segs.size() - 1);
                    const Seg& seg = segs[s];
                    std::vector<uint8_t> frame =
                        seg.fwd ? frames::tcp_segment(client, server, sport, dport, seg.flags,
                                                      seq_f, seg.payload)
                                : frames::tcp_segment(server, client, dport, sport, seg.flags,
                                                      seq_b, seg.payload);
                    (seg.fwd ? seq_f : seq_b) += static_cast<uint32_t>(seg.payload);
                    frames_out.push_back({at, frames_out.size(), std::move(frame)});
                }

                PacketRecord head;
                head.src_addr = client;
                head.src_port = sport;
                head.dst_addr = server;
                head.dst_port = dport;
                head.transport = Transport::Tcp;
                conversations.push_back({start_us, FlowKey::canonical(head),
                                         site.targeted ? site.site_label : std::string()});
                clock_us += 20000 + rng.below(400000); // conversations may overlap
            }
        }
        clock_us += 2000000 + rng.below(3000000); // pause between visits
    }

    std::sort(frames_out.begin(), frames_out.end(), [](const TimedFrame& a, const TimedFrame& b) {
        if (a.us != b.us) return a.us < b.us;
        return a.order < b.order;
    });
    std::sort(conversations.begin(), conversations.end(),
              [](const synth_detail::Conversation& a, const synth_detail::Conversation& b) {
                  if (a.first_us != b.first_us) return a.first_us < b.first_us;
                  return a.key < b.key;
              });

    SynthCapture out;
    CaptureWriter writer(opt.format, opt.byte_order, linktype::Ethernet,
                         opt.format == CaptureFormat::PcapNano ? 9 : 6);
    uint64_t tick_scale = opt.format == CaptureFormat::PcapNano ? 1000 : 1;
    for (const auto& tf : frames_out) writer.add_packet(tf.us * tick_scale, tf.frame);
    out.capture_bytes = writer.bytes();
    out.packet_count = frames_out.size();
    out.flow_count = conversations.size();

    MonitoredList list;
    for (const SiteProfile& site : profiles) {
        if (!site.targeted) continue;
        for (const IpAddr& a : site.addresses)
            list.add(site.site_label, Cidr{a, a.size == 4 ? 32 : 128});
    }
    out.monitored_list_text = list.to_text();

    out.truth_csv = "flow_index,site_label\r\n";
    for (size_t i = 0; i < conversations.size(); ++i)
        out.truth_csv += csv::join_row({std::to_string(i), conversations[i].site_label});
    return out;
}

// --- direct dataset generation -------------------------------------------------

namespace synth_detail {

// Unit directions in the 5-dim log-quantity space. Greedy max-min packing:
// each class direction is the best of many candidates by distance to the
// directions already placed, so "separability" means what it says even for
// 20 classes.
inline std::vector<std::array<double, 5>> class_directions(size_t n, Rng& rng) {
    auto draw = [&rng] {
        std::array<double, 5> d{};
        double norm = 0.0;
        do {
            norm = 0.0;
            for (double& v : d) {
                v = rng.normal();
                norm += v * v;
            }
        } while (norm < 1e-9);
        norm = std::sqrt(norm);
        for (double& v : d) v /= norm;
        return d;
    };
    std::vector<std::array<double, 5>> dirs;
    for (size_t c = 0; c < n; ++c) {
        std::array<double, 5> best{};
        double best_score = -1.0;
        for (int attempt = 0; attempt < 400; ++attempt) {
            auto d = draw();
            double score = std::numeric_limits<double>::infinity();
            for (const auto& prev : dirs) {
                double dist2 = 0.0;
                for (size_t j = 0; j < 5; ++j) dist2 += (d[j] - prev[j]) * (d[j] - prev[j]);
                score = std::min(score, dist2);
            }
            if (dirs.empty()) score = 1.0;
            if (score > best_score) {
                best_score = score;
                best = d;
            }
        }
        dirs.push_back(best);
    }
    return dirs;
}

// sigma moved per separability unit along the class direction
constexpr double kSeparationScale = 2.0;

struct ShiftedParams {
    double mu_duration;
    double mu_fwd_bytes;
    double mu_bwd_bytes;
    double fwd_rate;
    double bwd_rate;
};

// Log-space channels shift by s*sigma; Poisson rates shift additively in
// sqrt space (their natural sigma scale), keeping every channel close to
// linear in the raw features.
inline ShiftedParams shifted_params(const SiteProfile& p, const std::array<double, 5>& dir,
                                    double separability) {
    double s = separability * kSeparationScale;
    auto shifted_rate = [s](double base, double dir_component) {
        double root = std::max(1.0, std::sqrt(base) + 0.3 * s * dir_component);
        return root * root;
    };
    return {
        p.log_duration_mu + s * p.log_duration_sigma * dir[0],
        p.log_fwd_bytes_mu + s * p.log_fwd_bytes_sigma * dir[1],
        p.log_bwd_bytes_mu + s * p.log_bwd_bytes_sigma * dir[2],
        shifted_rate(p.fwd_packet_rate, dir[3]),
        shifted_rate(p.bwd_packet_rate, dir[4]),
    };
}

inline std::vector<size_t> largest_remainder(double total_share, std::span<const double> weights) {
    // rows per bucket proportional to weights, summing to round(total_share)
    size_t total = static_cast<size_t>(std::llround(total_share));
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    std::vector<size_t> out(weights.size(), 0);
    std::vector<std::pair<double, size_t>> rem;
    size_t assigned = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
        double quota = static_cast<double>(total) * weights[i] / wsum;
        out[i] = static_cast<size_t>(std::floor(quota));
        assigned += out[i];
        rem.emplace_back(-(quota - std::floor(quota)), i);
    }
    std::sort(rem.begin(), rem.end());
    for (size_t i = 0; i < total - assigned; ++i) out[rem[i].second] += 1;
    return out;
}

} // namespace synth_detail

// Samples the base flow quantities from class-shifted distributions and
// derives the feature schema through the same formulas as featurize, so all
// feature invariants hold by construction. separability 0 makes every class
// identically distributed.
inline LabeledDataset generate_dataset(std::span<const SiteProfile> profiles,
                                       size_t rows_per_class, double separability,
                                       std::optional<double> targeted_fraction, uint64_t seed) {
    if (profiles.empty()) throw std::invalid_argument("need at least one site profile");
    Rng dir_rng = Rng::derive(seed, 1);
    auto dirs = synth_detail::class_directions(profiles.size(), dir_rng);

    size_t total_rows = rows_per_class * profiles.size();
    std::vector<size_t> rows_for(profiles.size(), rows_per_class);
    if (targeted_fraction) {
        std::vector<double> tw, uw;
        for (const auto& p : profiles) (p.targeted ? tw : uw).push_back(1.0);
        if (tw.empty() || uw.empty())
            throw std::invalid_argument("imbalance requires both targeted and untargeted profiles");
        auto t_rows = synth_detail::largest_remainder(
            *targeted_fraction * static_cast<double>(total_rows), tw);
        auto u_rows = synth_detail::largest_remainder(
            (1.0 - *targeted_fraction) * static_cast<double>(total_rows), uw);
        size_t ti = 0, ui = 0;
        for (size_t c = 0; c < profiles.size(); ++c)
            rows_for[c] = profiles[c].targeted ? t_rows[ti++] : u_rows[ui++];
    }

    LabeledDataset ds;
    ds.feature_names = feature_names();
    for (size_t c = 0; c < profiles.size(); ++c) {
        const SiteProfile& p = profiles[c];
        Rng rng = Rng::derive(seed, 100 + c);
        auto sp = synth_detail::shifted_params(p, dirs[c], separability);
        for (size_t i = 0; i < rows_for[c]; ++i) {
            Flow f;
            f.first_ts = 0.0;
            f.last_ts = rng.lognormal(sp.mu_duration, p.log_duration_sigma * p.noise_scale);
            f.fwd_packets = 1 + rng.poisson(sp.fwd_rate);
            f.bwd_packets = 1 + rng.poisson(sp.bwd_rate);
            f.fwd_bytes = static_cast<uint64_t>(
                std::max(54.0 * static_cast<double>(f.fwd_packets),
                         rng.lognormal(sp.mu_fwd_bytes, p.log_fwd_bytes_sigma * p.noise_scale)));
            f.bwd_bytes = static_cast<uint64_t>(
                std::max(54.0 * static_cast<double>(f.bwd_packets),
                         rng.lognormal(sp.mu_bwd_bytes, p.log_bwd_bytes_sigma * p.noise_scale)));
            auto v = featurize(f).values();
            ds.append_row(std::vector<double>(v.begin(), v.end()),
                          p.targeted ? BinaryLabel::Targeted : BinaryLabel::Untargeted,
                          p.targeted ? p.site_label : std::string());
        }
    }
    return ds;
}

} // namespace wfp
