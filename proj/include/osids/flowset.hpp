#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "osids/net.hpp"

namespace osids {

// Flow container: a short text manifest followed by little-endian binary
// per-flow records. See docs/formats.md for the byte layout.

std::string serialize_flows(const std::vector<Flow>& flows);
std::vector<Flow> deserialize_flows(const std::string& bytes);

void write_flows_file(const std::string& path, const std::vector<Flow>& flows);
std::vector<Flow> read_flows_file(const std::string& path);

} // namespace osids
