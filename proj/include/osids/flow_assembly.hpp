#pragma once

#include <string>
#include <vector>

#include "osids/net.hpp"

namespace osids {

inline constexpr double kDefaultIdleTimeout = 64.0; // seconds

// Groups packets into bidirectional flows keyed by canonical 5-tuple. A flow
// is split when the in-key packet gap exceeds idle_timeout, or when a TCP
// packet with SYN set and ACK clear arrives on a tuple that already has an
// open flow (connection restart on a reused tuple). Packets are stably
// sorted by timestamp first, so capture order breaks ties.
std::vector<Flow> assemble_flows(std::vector<RawPacket> packets,
                                 double idle_timeout = kDefaultIdleTimeout);

// Assigns labels from attack records: a flow matches a record when its
// endpoint IP pair equals the record's pair in either direction and the flow
// start time falls inside the record window. Among multiple matches the
// record with the latest start wins; equal starts keep the earliest record
// in file order. Unmatched flows become BENIGN.
std::vector<Flow> label_flows(std::vector<Flow> flows,
                              const std::vector<AttackRecord>& records);

// CSV with header `src_ip,dst_ip,start_time,end_time,label`; times are Unix
// seconds with an optional fractional part.
std::vector<AttackRecord> parse_attack_csv(const std::string& text);

// Minimal CSV line splitter with double-quote support.
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_quote(const std::string& field);

} // namespace osids
