#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace swarmsim {

using Payload = nlohmann::json;

// `/<namespace>/<channel>` for robot-scoped topics, `/<channel>` for global
// ones. Namespacing is what keeps one robot's commands from steering another.
struct TopicPath {
  std::string ns;       // empty for global topics
  std::string channel;  // may contain '/', e.g. sensors/sound

  std::string full_path() const;
  bool operator<(const TopicPath& o) const;
};

TopicPath parse_topic(const std::string& full_path);

// Standard topic table. Paths are fixed; tests pin the exact strings.
TopicPath topic_odom(const std::string& robot);
TopicPath topic_cmd_vel(const std::string& robot);
TopicPath topic_position_cmd(const std::string& robot);
TopicPath topic_battery(const std::string& robot);
TopicPath topic_sound(const std::string& robot);
TopicPath topic_imu(const std::string& robot);
TopicPath topic_color(const std::string& robot);
TopicPath topic_env(const std::string& robot);
TopicPath topic_global_position();
TopicPath service_charging_request();

struct TopicEnvelope {
  TopicPath topic;
  uint64_t seq = 0;  // per topic, starts at 1, no gaps among emitted messages
  double stamp_s = 0.0;
  Payload payload;
};

class Bus;

class Publisher {
 public:
  Publisher() = default;
  // Offers a message. Unthrottled topics emit immediately; rate-limited
  // topics emit when the gate is open, otherwise the offer is coalesced
  // latest-wins and flushed by the next Bus::step whose time opens the gate.
  void publish(const Payload& payload);

 private:
  friend class Bus;
  Publisher(Bus* bus, std::string path) : bus_(bus), path_(std::move(path)) {}
  Bus* bus_ = nullptr;
  std::string path_;
};

class Subscription {
 public:
  Subscription() = default;
  std::optional<TopicEnvelope> pop();
  std::vector<TopicEnvelope> drain();
  // Latest envelope this subscription has seen, kept even after pop/drain
  // and even if the queue overflowed past it.
  std::optional<TopicEnvelope> latest() const;
  size_t queued() const;
  uint64_t enqueued_count() const;
  uint64_t dropped_count() const;
  uint64_t popped_count() const;

 private:
  friend class Bus;
  struct Queue;
  std::shared_ptr<Queue> q_;
};

// Poll-based reply handle. ready() flips once the responder has answered or
// the deadline has passed; get() returns the reply or throws the stored
// timeout/remote error.
class PendingReply {
 public:
  PendingReply() = default;
  bool ready() const;
  Payload get() const;

 private:
  friend class Bus;
  struct State;
  std::shared_ptr<State> st_;
};

// One column per topic, sorted by namespace; a column is absent until its
// topic has emitted at least once.
struct AggregateMatrix {
  std::vector<std::string> namespaces;
  std::vector<std::optional<std::vector<double>>> columns;  // each of size M
};

class Bus {
 public:
  Bus();
  ~Bus();  // out of line: Topic is an implementation detail
  Bus(const Bus&) = delete;
  Bus& operator=(const Bus&) = delete;

  // rate_hz = 0 means unthrottled. A second advertise of the same path is an
  // ownership error.
  Publisher advertise(const TopicPath& topic, double rate_hz = 0.0);
  // Releases ownership so the path can be advertised again. Seq numbering
  // continues where it left off, keeping per-topic monotonicity.
  void unadvertise(const TopicPath& topic);
  Subscription subscribe(const TopicPath& topic, size_t queue_depth = 10);

  void register_responder(const TopicPath& service,
                          std::function<Payload(const Payload&)> fn);
  PendingReply request(const TopicPath& service, const Payload& body,
                       double timeout_s);

  // Advances bus time, flushes coalesced offers whose rate gate has opened,
  // dispatches queued requests, and expires pending requests whose deadline
  // has passed. Time must not go backwards.
  void step(double now_s);

  double now() const { return now_s_; }

  // Latest emitted payload per topic, for matrix aggregation and snapshots.
  std::optional<TopicEnvelope> latest_on(const TopicPath& topic) const;
  AggregateMatrix aggregate_matrix(const std::vector<TopicPath>& topics,
                                   const std::vector<std::string>& fields) const;

  uint64_t emitted_count(const TopicPath& topic) const;

 private:
  friend class Publisher;
  struct Topic;

  void offer(const std::string& path, const Payload& payload);
  void emit(Topic& t, const Payload& payload);
  void dispatch_requests();

  struct Request {
    std::string service;
    Payload body;
    double deadline_s = 0.0;
    PendingReply reply;
  };

  mutable std::mutex mu_;
  std::map<std::string, Topic> topics_;
  std::map<std::string, std::function<Payload(const Payload&)>> responders_;
  std::vector<Request> pending_requests_;
  double now_s_ = 0.0;
  uint64_t next_correlation_ = 1;
};

}  // namespace swarmsim
