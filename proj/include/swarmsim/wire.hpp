#pragma once

#include <string>
#include <vector>

#include "swarmsim/bus.hpp"

namespace swarmsim {

// Text framing for moving envelopes between processes. A stream is one
// header line followed by length-prefixed frames:
//
//   swarmsim-wire 1 utf-8 sorted-fields\n
//   <byte-count>\n<frame-body>
//
// Each frame body is one envelope as a tab-separated flat record:
// topic, seq, stamp, then `key=value` per payload field in sorted key
// order, values JSON-encoded (so tabs never appear raw inside a value).
// Round-trips are exact: numbers re-parse to the identical double.

std::string wire_header();

std::string encode_frame(const TopicEnvelope& envelope);
TopicEnvelope decode_frame(const std::string& body);

std::string encode_stream(const std::vector<TopicEnvelope>& envelopes);
std::vector<TopicEnvelope> decode_stream(const std::string& stream);

}  // namespace swarmsim
