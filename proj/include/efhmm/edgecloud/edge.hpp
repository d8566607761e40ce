#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "efhmm/edgecloud/net.hpp"
#include "efhmm/edgecloud/protocol.hpp"
#include "efhmm/events.hpp"
#include "efhmm/model_io.hpp"
#include "efhmm/signatures.hpp"

namespace efhmm {

struct EdgeStats {
  std::size_t raw_samples_seen = 0;
  std::size_t messages_sent = 0;  // HELLO + EVENT + STEADY
  std::size_t bytes_sent = 0;
  std::size_t events_sent = 0;
  std::size_t steady_sent = 0;
  std::size_t dropped = 0;  // discarded from a full outbound queue

  void record(const wire::Message& m, std::size_t bytes) {
    ++messages_sent;
    bytes_sent += bytes;
    if (std::holds_alternative<wire::Event>(m)) ++events_sent;
    else if (std::holds_alternative<wire::Steady>(m)) ++steady_sent;
  }

  bool operator==(const EdgeStats&) const = default;
};

/// Turns raw samples into EVENT and STEADY messages. Raw samples never leave
/// this object; seq numbers are shared by both message kinds.
class EdgeEncoder {
 public:
  EdgeEncoder(std::string house_id, double sample_rate_hz, const DetectorConfig& config, double start_time = 0.0)
      : house_id_(std::move(house_id)),
        rate_(sample_rate_hz),
        start_time_(start_time),
        config_(config),
        detector_(config, sample_rate_hz) {}

  wire::Hello hello() const { return wire::Hello{house_id_, rate_, detector_config_hash(config_)}; }

  std::size_t samples_seen() const noexcept { return detector_.samples_seen(); }

  void push(double x, std::vector<wire::Message>& out) {
    detector_.push(x);
    drain(out);
  }

  void finish(std::vector<wire::Message>& out) {
    detector_.finish();
    drain(out);
  }

 private:
  double time_at(std::size_t idx) const { return start_time_ + static_cast<double>(idx) / rate_; }

  void drain(std::vector<wire::Message>& out) {
    for (auto& item : detector_.take()) {
      if (const auto* ev = std::get_if<DetectedEvent>(&item)) {
        const EventRecord r = make_event_record(*ev, rate_, start_time_, detector_.window_samples());
        out.emplace_back(wire::Event{next_seq_++, time_at(r.boundary.start_idx), time_at(r.boundary.spike_idx),
                                     time_at(r.boundary.end_idx), r.dts, r.dsp});
      } else if (const auto* w = std::get_if<SteadyWindow>(&item)) {
        out.emplace_back(wire::Steady{next_seq_++, time_at(w->end_idx), w->mean});
      }
    }
  }

  std::string house_id_;
  double rate_;
  double start_time_;
  DetectorConfig config_;
  EventDetector detector_;
  std::uint64_t next_seq_ = 1;
};

/// Encodes a whole series offline and accounts it as if every message were sent.
inline EdgeStats account_stream(const PowerSeries& series, const std::string& house_id, const DetectorConfig& config,
                                std::vector<wire::Message>* messages = nullptr) {
  series.validate();
  EdgeEncoder encoder(house_id, series.sample_rate_hz, config, series.start_time);
  EdgeStats stats;
  std::vector<wire::Message> batch;
  const auto account = [&](const wire::Message& m) {
    stats.record(m, wire::encode(m).size());
    if (messages) messages->push_back(m);
  };
  account(encoder.hello());
  for (double x : series.samples) {
    encoder.push(x, batch);
    for (const auto& m : batch) account(m);
    batch.clear();
  }
  encoder.finish(batch);
  for (const auto& m : batch) account(m);
  stats.raw_samples_seen = encoder.samples_seen();
  return stats;
}

/// Outbound buffer that discards the oldest message when full.
class OutboundQueue {
 public:
  explicit OutboundQueue(std::size_t capacity = 10000) : capacity_(capacity) {
    require(capacity >= 1, ErrorCode::invalid_argument, "queue capacity must be >= 1");
  }

  void push(wire::Message m) {
    if (items_.size() == capacity_) {
      items_.pop_front();
      ++dropped_;
    }
    items_.push_back(std::move(m));
  }

  bool empty() const noexcept { return items_.empty(); }
  std::size_t size() const noexcept { return items_.size(); }
  const wire::Message& front() const { return items_.front(); }
  void pop() { items_.pop_front(); }
  std::size_t dropped() const noexcept { return dropped_; }

 private:
  std::size_t capacity_;
  std::deque<wire::Message> items_;
  std::size_t dropped_ = 0;
};

struct EdgeOptions {
  std::size_t queue_capacity = 10000;
  std::size_t max_connect_attempts = 5;
  std::chrono::milliseconds retry_delay{200};
};

struct EdgeRunResult {
  EdgeStats stats;
  std::vector<wire::Assign> assignments;
  std::vector<wire::Error> errors;
};

/// Streams a series to the cloud and collects the ASSIGN replies.
///
/// A send failure marks the link down; messages keep accumulating in the
/// bounded queue while the link is re-established, and the handshake is
/// repeated on the new connection. The cloud starts a fresh session on
/// every connection, so appliance state restarts from all-OFF after a
/// reconnect.
class EdgeAgent {
 public:
  EdgeAgent(net::Endpoint cloud, std::string house_id, const DetectorConfig& config, EdgeOptions options = {})
      : cloud_(std::move(cloud)), house_id_(std::move(house_id)), config_(config), options_(options) {}

  EdgeRunResult run(const PowerSeries& series) {
    series.validate();
    EdgeEncoder encoder(house_id_, series.sample_rate_hz, config_, series.start_time);
    OutboundQueue queue(options_.queue_capacity);
    EdgeRunResult result;
    hello_ = encoder.hello();
    connect_with_retry(result);

    std::vector<wire::Message> batch;
    for (double x : series.samples) {
      encoder.push(x, batch);
      for (auto& m : batch) queue.push(std::move(m));
      batch.clear();
      flush(queue, result, false);
    }
    encoder.finish(batch);
    for (auto& m : batch) queue.push(std::move(m));
    flush(queue, result, true);

    socket_.shutdown_write();
    join_reader();
    socket_.close();
    result.stats.raw_samples_seen = encoder.samples_seen();
    result.stats.dropped = queue.dropped();
    std::lock_guard lock(replies_mutex_);
    result.assignments = std::move(assignments_);
    result.errors = std::move(errors_);
    return result;
  }

 private:
  void flush(OutboundQueue& queue, EdgeRunResult& result, bool must_deliver) {
    while (!queue.empty()) {
      if (!connected_) {
        const auto now = std::chrono::steady_clock::now();
        if (!must_deliver && now - last_attempt_ < options_.retry_delay) return;
        if (must_deliver) connect_with_retry(result);
        else if (!try_connect(result)) return;
      }
      const std::string line = wire::encode(queue.front());
      try {
        socket_.send_all(line);
      } catch (const efhmm::Error&) {
        drop_connection();
        continue;
      }
      result.stats.record(queue.front(), line.size());
      queue.pop();
    }
  }

  void connect_with_retry(EdgeRunResult& result) {
    for (std::size_t attempt = 0; attempt < options_.max_connect_attempts; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(options_.retry_delay);
      if (try_connect(result)) return;
    }
    fail(ErrorCode::io, "cannot reach cloud at " + cloud_.host + ":" + std::to_string(cloud_.port) + " after " +
                            std::to_string(options_.max_connect_attempts) + " attempts");
  }

  /// Connects and handshakes. A rejected handshake is fatal.
  bool try_connect(EdgeRunResult& result) {
    last_attempt_ = std::chrono::steady_clock::now();
    drop_connection();
    try {
      socket_ = net::connect_tcp(cloud_);
      const std::string hello = wire::encode(hello_);
      socket_.send_all(hello);
      reader_ = std::make_unique<net::LineReader>(socket_);
      const auto reply = reader_->next();
      if (!reply) fail(ErrorCode::io, "cloud closed the connection during the handshake");
      const wire::Message m = wire::decode(*reply);
      if (const auto* e = std::get_if<wire::Error>(&m)) {
        socket_.close();
        throw HandshakeRejected(e->code + ": " + e->detail);
      }
      if (!std::holds_alternative<wire::Hello>(m)) fail(ErrorCode::protocol, "unexpected handshake reply");
      result.stats.record(hello_, hello.size());
    } catch (const HandshakeRejected& e) {
      fail(ErrorCode::protocol, std::string("handshake rejected: ") + e.what());
    } catch (const efhmm::Error& e) {
      if (e.code() == ErrorCode::protocol) throw;
      socket_.close();
      reader_.reset();
      return false;
    }
    connected_ = true;
    reader_thread_ = std::thread([this] { read_replies(); });
    return true;
  }

  void read_replies() {
    try {
      while (auto line = reader_->next()) {
        const wire::Message m = wire::decode(*line);
        std::lock_guard lock(replies_mutex_);
        if (const auto* a = std::get_if<wire::Assign>(&m)) assignments_.push_back(*a);
        else if (const auto* e = std::get_if<wire::Error>(&m)) errors_.push_back(*e);
      }
    } catch (const efhmm::Error&) {
      // Link lost; the sender notices on its next write.
    }
  }

  void join_reader() {
    if (reader_thread_.joinable()) reader_thread_.join();
  }

  void drop_connection() {
    if (connected_) socket_.shutdown_both();
    join_reader();
    socket_.close();
    reader_.reset();
    connected_ = false;
  }

  struct HandshakeRejected : std::runtime_error {
    using std::runtime_error::runtime_error;
  };

  net::Endpoint cloud_;
  std::string house_id_;
  DetectorConfig config_;
  EdgeOptions options_;
  wire::Hello hello_;
  net::Socket socket_;
  std::unique_ptr<net::LineReader> reader_;
  std::thread reader_thread_;
  bool connected_ = false;
  std::chrono::steady_clock::time_point last_attempt_{};
  std::mutex replies_mutex_;
  std::vector<wire::Assign> assignments_;
  std::vector<wire::Error> errors_;
};

/// Transmitted data relative to the raw stream.
struct ReductionReport {
  std::size_t raw_samples = 0;     // T
  std::size_t events = 0;          // M
  double window_seconds = 0.0;     // n_w
  double sample_rate_hz = 0.0;     // f
  double event_ratio = 0.0;        // 3M / T
  double window_ratio = 0.0;       // 1 / (n_w f)
  double message_ratio = 0.0;      // messages sent / T
  double bytes_ratio = 0.0;        // bytes sent / (8 T), raw samples as doubles
};

inline ReductionReport reduction_report(const EdgeStats& stats, double window_seconds, double sample_rate_hz) {
  require(stats.raw_samples_seen > 0, ErrorCode::invalid_argument, "no raw samples were seen");
  require(window_seconds > 0.0 && sample_rate_hz > 0.0, ErrorCode::invalid_argument,
          "window_seconds and sample_rate_hz must be > 0");
  ReductionReport r;
  const auto t = static_cast<double>(stats.raw_samples_seen);
  r.raw_samples = stats.raw_samples_seen;
  r.events = stats.events_sent;
  r.window_seconds = window_seconds;
  r.sample_rate_hz = sample_rate_hz;
  r.event_ratio = 3.0 * static_cast<double>(stats.events_sent) / t;
  r.window_ratio = 1.0 / (window_seconds * sample_rate_hz);
  r.message_ratio = static_cast<double>(stats.messages_sent) / t;
  r.bytes_ratio = static_cast<double>(stats.bytes_sent) / (8.0 * t);
  return r;
}

inline std::string percent(double ratio) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f%%", ratio * 100.0);
  return buf;
}

inline std::string format_report(const ReductionReport& r) {
  std::string out;
  out += "raw samples (T): " + std::to_string(r.raw_samples) + "\n";
  out += "events (M): " + std::to_string(r.events) + "\n";
  out += "event ratio 3M/T: " + percent(r.event_ratio) + "\n";
  out += "window ratio 1/(n_w*f): " + percent(r.window_ratio) + "\n";
  out += "measured message ratio: " + percent(r.message_ratio) + "\n";
  out += "measured bytes ratio: " + percent(r.bytes_ratio) + "\n";
  return out;
}

}  // namespace efhmm
