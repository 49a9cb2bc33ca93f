#include "swarmsim/wire.hpp"

#include <cstdlib>

#include "swarmsim/errors.hpp"

namespace swarmsim {

namespace {
constexpr const char* kHeader = "swarmsim-wire 1 utf-8 sorted-fields";

std::string dump_number(double v) { return nlohmann::json(v).dump(); }
}  // namespace

std::string wire_header() { return std::string(kHeader) + "\n"; }

std::string encode_frame(const TopicEnvelope& e) {
  if (!e.payload.is_object())
    throw InvalidInput("wire frames carry record payloads only");
  std::string body = e.topic.full_path();
  body += '\t';
  body += std::to_string(e.seq);
  body += '\t';
  body += dump_number(e.stamp_s);
  for (auto it = e.payload.begin(); it != e.payload.end(); ++it) {
    body += '\t';
    body += it.key();
    body += '=';
    body += it.value().dump();
  }
  return body;
}

TopicEnvelope decode_frame(const std::string& body) {
  std::vector<std::string> tokens;
  size_t start = 0;
  while (true) {
    const size_t tab = body.find('\t', start);
    if (tab == std::string::npos) {
      tokens.push_back(body.substr(start));
      break;
    }
    tokens.push_back(body.substr(start, tab - start));
    start = tab + 1;
  }
  if (tokens.size() < 3)
    throw InvalidInput("wire frame needs topic, seq and stamp fields");

  TopicEnvelope e;
  e.topic = parse_topic(tokens[0]);
  try {
    e.seq = std::stoull(tokens[1]);
    e.stamp_s = nlohmann::json::parse(tokens[2]).get<double>();
  } catch (const std::exception&) {
    throw InvalidInput("wire frame has a malformed seq or stamp");
  }
  e.payload = Payload::object();
  for (size_t i = 3; i < tokens.size(); ++i) {
    const size_t eq = tokens[i].find('=');
    if (eq == std::string::npos || eq == 0)
      throw InvalidInput("wire frame field '" + tokens[i] +
                         "' is not key=value");
    try {
      e.payload[tokens[i].substr(0, eq)] =
          nlohmann::json::parse(tokens[i].substr(eq + 1));
    } catch (const nlohmann::json::parse_error&) {
      throw InvalidInput("wire frame field '" + tokens[i] +
                         "' has a malformed value");
    }
  }
  return e;
}

std::string encode_stream(const std::vector<TopicEnvelope>& envelopes) {
  std::string out = wire_header();
  for (const auto& e : envelopes) {
    const std::string body = encode_frame(e);
    out += std::to_string(body.size());
    out += '\n';
    out += body;
    out += '\n';
  }
  return out;
}

std::vector<TopicEnvelope> decode_stream(const std::string& stream) {
  const std::string header = wire_header();
  if (stream.compare(0, header.size(), header) != 0)
    throw InvalidInput("wire stream header missing or wrong version");
  std::vector<TopicEnvelope> out;
  size_t pos = header.size();
  while (pos < stream.size()) {
    const size_t nl = stream.find('\n', pos);
    if (nl == std::string::npos)
      throw InvalidInput("wire stream truncated in a length prefix at byte " +
                         std::to_string(pos));
    size_t len = 0;
    try {
      len = std::stoull(stream.substr(pos, nl - pos));
    } catch (const std::exception&) {
      throw InvalidInput("wire stream has a malformed length prefix at byte " +
                         std::to_string(pos));
    }
    const size_t body_start = nl + 1;
    if (body_start + len + 1 > stream.size())
      throw InvalidInput("wire stream truncated inside a frame at byte " +
                         std::to_string(body_start));
    if (stream[body_start + len] != '\n')
      throw InvalidInput("wire frame at byte " + std::to_string(body_start) +
                         " is not newline-terminated");
    out.push_back(decode_frame(stream.substr(body_start, len)));
    pos = body_start + len + 1;
  }
  return out;
}

}  // namespace swarmsim
