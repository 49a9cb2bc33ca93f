#include "swarmsim/bus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "swarmsim/errors.hpp"

namespace swarmsim {

namespace {

constexpr double kGateEps = 1e-9;

bool valid_ns_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

void validate_topic(const TopicPath& t) {
  for (char c : t.ns)
    if (!valid_ns_char(c))
      throw InvalidInput("topic namespace '" + t.ns +
                         "' has characters outside [a-z0-9_]");
  if (t.channel.empty()) throw InvalidInput("topic channel is empty");
  if (t.channel.front() == '/' || t.channel.back() == '/')
    throw InvalidInput("topic channel '" + t.channel +
                       "' must not start or end with '/'");
  for (char c : t.channel)
    if (!valid_ns_char(c) && c != '/')
      throw InvalidInput("topic channel '" + t.channel +
                         "' has characters outside [a-z0-9_/]");
  if (t.channel.find("//") != std::string::npos)
    throw InvalidInput("topic channel '" + t.channel +
                       "' has an empty segment");
}

}  // namespace

std::string TopicPath::full_path() const {
  return ns.empty() ? "/" + channel : "/" + ns + "/" + channel;
}

bool TopicPath::operator<(const TopicPath& o) const {
  return ns != o.ns ? ns < o.ns : channel < o.channel;
}

TopicPath parse_topic(const std::string& full_path) {
  if (full_path.size() < 2 || full_path.front() != '/')
    throw InvalidInput("topic path '" + full_path + "' must start with '/'");
  const std::string rest = full_path.substr(1);
  const auto slash = rest.find('/');
  TopicPath t;
  if (slash == std::string::npos) {
    t.channel = rest;
  } else {
    t.ns = rest.substr(0, slash);
    t.channel = rest.substr(slash + 1);
  }
  validate_topic(t);
  return t;
}

TopicPath topic_odom(const std::string& r) { return {r, "odom"}; }
TopicPath topic_cmd_vel(const std::string& r) { return {r, "cmd_vel"}; }
TopicPath topic_position_cmd(const std::string& r) {
  return {r, "position_cmd"};
}
TopicPath topic_battery(const std::string& r) { return {r, "battery"}; }
TopicPath topic_sound(const std::string& r) { return {r, "sensors/sound"}; }
TopicPath topic_imu(const std::string& r) { return {r, "sensors/imu"}; }
TopicPath topic_color(const std::string& r) { return {r, "sensors/color"}; }
TopicPath topic_env(const std::string& r) { return {r, "sensors/env"}; }
TopicPath topic_global_position() { return {"", "global_position"}; }
TopicPath service_charging_request() { return {"", "charging/request"}; }

struct Subscription::Queue {
  mutable std::mutex mu;
  std::deque<TopicEnvelope> q;
  size_t depth = 10;
  uint64_t enqueued = 0;
  uint64_t dropped = 0;
  uint64_t popped = 0;
  std::optional<TopicEnvelope> latest;
};

std::optional<TopicEnvelope> Subscription::pop() {
  if (!q_) throw InvalidRequest("subscription handle is empty");
  std::lock_guard<std::mutex> lk(q_->mu);
  if (q_->q.empty()) return std::nullopt;
  TopicEnvelope e = std::move(q_->q.front());
  q_->q.pop_front();
  ++q_->popped;
  return e;
}

std::vector<TopicEnvelope> Subscription::drain() {
  std::vector<TopicEnvelope> out;
  while (auto e = pop()) out.push_back(std::move(*e));
  return out;
}

std::optional<TopicEnvelope> Subscription::latest() const {
  if (!q_) throw InvalidRequest("subscription handle is empty");
  std::lock_guard<std::mutex> lk(q_->mu);
  return q_->latest;
}

size_t Subscription::queued() const {
  if (!q_) throw InvalidRequest("subscription handle is empty");
  std::lock_guard<std::mutex> lk(q_->mu);
  return q_->q.size();
}

uint64_t Subscription::enqueued_count() const {
  std::lock_guard<std::mutex> lk(q_->mu);
  return q_->enqueued;
}

uint64_t Subscription::dropped_count() const {
  std::lock_guard<std::mutex> lk(q_->mu);
  return q_->dropped;
}

uint64_t Subscription::popped_count() const {
  std::lock_guard<std::mutex> lk(q_->mu);
  return q_->popped;
}

struct PendingReply::State {
  mutable std::mutex mu;
  bool ready = false;
  Payload reply;
  enum { kNone, kTimeout, kRemote } error = kNone;
  std::string error_msg;
};

bool PendingReply::ready() const {
  if (!st_) throw InvalidRequest("reply handle is empty");
  std::lock_guard<std::mutex> lk(st_->mu);
  return st_->ready;
}

Payload PendingReply::get() const {
  if (!st_) throw InvalidRequest("reply handle is empty");
  std::lock_guard<std::mutex> lk(st_->mu);
  if (!st_->ready) throw InvalidRequest("reply is not ready yet");
  if (st_->error == State::kTimeout) throw TimeoutError(st_->error_msg);
  if (st_->error == State::kRemote) throw RemoteError(st_->error_msg);
  return st_->reply;
}

struct Bus::Topic {
  TopicPath path;
  bool advertised = false;
  double rate_hz = 0.0;
  double last_emit_s = -std::numeric_limits<double>::infinity();
  std::optional<Payload> pending;  // coalesced latest-wins offer
  uint64_t seq = 0;
  uint64_t emitted = 0;
  std::optional<TopicEnvelope> latest;
  std::vector<std::shared_ptr<Subscription::Queue>> subs;
};

Bus::Bus() = default;
Bus::~Bus() = default;

void Publisher::publish(const Payload& payload) {
  if (!bus_) throw InvalidRequest("publisher handle is empty");
  bus_->offer(path_, payload);
}

Publisher Bus::advertise(const TopicPath& topic, double rate_hz) {
  validate_topic(topic);
  if (rate_hz < 0.0) throw InvalidInput("publish rate must be >= 0");
  std::lock_guard<std::mutex> lk(mu_);
  const std::string path = topic.full_path();
  Topic& t = topics_[path];
  if (t.advertised)
    throw OwnershipError("topic '" + path + "' already advertised");
  t.path = topic;
  t.advertised = true;
  t.rate_hz = rate_hz;
  return Publisher(this, path);
}

void Bus::unadvertise(const TopicPath& topic) {
  std::lock_guard<std::mutex> lk(mu_);
  auto it = topics_.find(topic.full_path());
  if (it == topics_.end() || !it->second.advertised)
    throw InvalidRequest("topic '" + topic.full_path() +
                         "' is not advertised");
  it->second.advertised = false;
  it->second.pending.reset();
}

Subscription Bus::subscribe(const TopicPath& topic, size_t queue_depth) {
  validate_topic(topic);
  if (queue_depth == 0) throw InvalidInput("queue depth must be >= 1");
  std::lock_guard<std::mutex> lk(mu_);
  Topic& t = topics_[topic.full_path()];
  if (!t.advertised) t.path = topic;
  auto q = std::make_shared<Subscription::Queue>();
  q->depth = queue_depth;
  t.subs.push_back(q);
  Subscription s;
  s.q_ = std::move(q);
  return s;
}

void Bus::emit(Topic& t, const Payload& payload) {
  TopicEnvelope e;
  e.topic = t.path;
  e.seq = ++t.seq;
  e.stamp_s = now_s_;
  e.payload = payload;
  ++t.emitted;
  t.latest = e;
  t.last_emit_s = now_s_;
  for (auto& q : t.subs) {
    std::lock_guard<std::mutex> lk(q->mu);
    if (q->q.size() >= q->depth) {
      q->q.pop_front();
      ++q->dropped;
    }
    q->q.push_back(e);
    ++q->enqueued;
    q->latest = e;
  }
}

void Bus::offer(const std::string& path, const Payload& payload) {
  std::lock_guard<std::mutex> lk(mu_);
  Topic& t = topics_.at(path);
  if (t.rate_hz <= 0.0) {
    emit(t, payload);
    return;
  }
  const double period = 1.0 / t.rate_hz;
  if (now_s_ >= t.last_emit_s + period - kGateEps) {
    t.pending.reset();
    emit(t, payload);
  } else {
    t.pending = payload;
  }
}

void Bus::register_responder(const TopicPath& service,
                             std::function<Payload(const Payload&)> fn) {
  validate_topic(service);
  std::lock_guard<std::mutex> lk(mu_);
  const std::string path = service.full_path();
  if (responders_.count(path))
    throw OwnershipError("service '" + path + "' already has a responder");
  responders_[path] = std::move(fn);
}

PendingReply Bus::request(const TopicPath& service, const Payload& body,
                          double timeout_s) {
  validate_topic(service);
  if (timeout_s < 0.0) throw InvalidInput("request timeout must be >= 0");
  PendingReply reply;
  reply.st_ = std::make_shared<PendingReply::State>();

  std::function<Payload(const Payload&)> fn;
  {
    std::lock_guard<std::mutex> lk(mu_);
    const std::string path = service.full_path();
    auto it = responders_.find(path);
    if (it == responders_.end()) {
      if (timeout_s == 0.0) {
        reply.st_->ready = true;
        reply.st_->error = PendingReply::State::kTimeout;
        reply.st_->error_msg = "no responder for '" + path + "'";
      } else {
        Request r;
        r.service = path;
        r.body = body;
        r.deadline_s = now_s_ + timeout_s;
        r.reply = reply;
        pending_requests_.push_back(std::move(r));
        ++next_correlation_;
      }
      return reply;
    }
    fn = it->second;
    ++next_correlation_;
  }

  // Responder runs outside the bus lock so it may publish or re-request.
  std::lock_guard<std::mutex> rk(reply.st_->mu);
  try {
    reply.st_->reply = fn(body);
  } catch (const std::exception& ex) {
    reply.st_->error = PendingReply::State::kRemote;
    reply.st_->error_msg = ex.what();
  }
  reply.st_->ready = true;
  return reply;
}

void Bus::dispatch_requests() {
  // Callers hold no locks here. Requests resolve in issue order.
  std::vector<Request> work;
  {
    std::lock_guard<std::mutex> lk(mu_);
    work.swap(pending_requests_);
  }
  std::vector<Request> still_pending;
  for (auto& r : work) {
    std::function<Payload(const Payload&)> fn;
    {
      std::lock_guard<std::mutex> lk(mu_);
      auto it = responders_.find(r.service);
      if (it != responders_.end()) fn = it->second;
    }
    if (fn) {
      std::lock_guard<std::mutex> rk(r.reply.st_->mu);
      try {
        r.reply.st_->reply = fn(r.body);
      } catch (const std::exception& ex) {
        r.reply.st_->error = PendingReply::State::kRemote;
        r.reply.st_->error_msg = ex.what();
      }
      r.reply.st_->ready = true;
    } else if (now_s_ >= r.deadline_s - 1e-12) {
      std::lock_guard<std::mutex> rk(r.reply.st_->mu);
      r.reply.st_->error = PendingReply::State::kTimeout;
      r.reply.st_->error_msg = "no responder for '" + r.service + "' within " +
                               std::to_string(r.deadline_s) + " s";
      r.reply.st_->ready = true;
    } else {
      still_pending.push_back(std::move(r));
    }
  }
  std::lock_guard<std::mutex> lk(mu_);
  for (auto& r : still_pending) pending_requests_.push_back(std::move(r));
}

void Bus::step(double now_s) {
  {
    std::lock_guard<std::mutex> lk(mu_);
    if (now_s < now_s_ - 1e-12)
      throw InvalidInterval("bus time must not go backwards");
    now_s_ = now_s;
    for (auto& [path, t] : topics_) {
      if (!t.pending) continue;
      const double period = t.rate_hz > 0.0 ? 1.0 / t.rate_hz : 0.0;
      if (now_s_ >= t.last_emit_s + period - kGateEps) {
        Payload p = std::move(*t.pending);
        t.pending.reset();
        emit(t, p);
      }
    }
  }
  dispatch_requests();
}

std::optional<TopicEnvelope> Bus::latest_on(const TopicPath& topic) const {
  std::lock_guard<std::mutex> lk(mu_);
  auto it = topics_.find(topic.full_path());
  if (it == topics_.end()) return std::nullopt;
  return it->second.latest;
}

AggregateMatrix Bus::aggregate_matrix(
    const std::vector<TopicPath>& topics,
    const std::vector<std::string>& fields) const {
  std::vector<TopicPath> sorted = topics;
  std::sort(sorted.begin(), sorted.end());
  std::lock_guard<std::mutex> lk(mu_);
  AggregateMatrix out;
  for (const auto& tp : sorted) {
    out.namespaces.push_back(tp.ns);
    auto it = topics_.find(tp.full_path());
    std::optional<TopicEnvelope> latest;
    if (it != topics_.end()) latest = it->second.latest;
    if (!latest) {
      out.columns.emplace_back(std::nullopt);
      continue;
    }
    const Payload& p = latest->payload;
    if (!p.is_object())
      throw ShapeError("payload on '" + tp.full_path() + "' is not a record");
    std::vector<double> col;
    col.reserve(fields.size());
    for (const auto& f : fields) {
      if (!p.contains(f) || !p.at(f).is_number())
        throw ShapeError("payload on '" + tp.full_path() +
                         "' lacks numeric field '" + f + "'");
      col.push_back(p.at(f).get<double>());
    }
    out.columns.emplace_back(std::move(col));
  }
  return out;
}

uint64_t Bus::emitted_count(const TopicPath& topic) const {
  std::lock_guard<std::mutex> lk(mu_);
  auto it = topics_.find(topic.full_path());
  return it == topics_.end() ? 0 : it->second.emitted;
}

}  // namespace swarmsim
