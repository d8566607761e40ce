#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "efhmm/edgecloud/net.hpp"
#include "efhmm/edgecloud/protocol.hpp"
#include "efhmm/inference.hpp"
#include "efhmm/model_io.hpp"

namespace efhmm {

/// Household models the cloud serves, keyed by house_id. Read-only once built.
class ModelRegistry {
 public:
  void add(HouseholdModel model) {
    model.validate();
    const std::string id = model.house_id;
    require(models_.find(id) == models_.end(), ErrorCode::validation, "duplicate house_id '" + id + "'");
    models_.emplace(id, std::move(model));
  }

  const HouseholdModel* find(const std::string& house_id) const {
    const auto it = models_.find(house_id);
    return it == models_.end() ? nullptr : &it->second;
  }

  std::size_t size() const noexcept { return models_.size(); }

 private:
  std::map<std::string, HouseholdModel> models_;
};

/// Protocol state of one edge connection, independent of any socket.
///
/// The connection must open with HELLO. Each EVENT is held until the next
/// STEADY, whose SSP feeds stage-2 confirmation; the reply is one ASSIGN
/// carrying the EVENT's seq. Other STEADY messages only advance seq.
class CloudSession {
 public:
  struct Reply {
    std::vector<wire::Message> messages;
    bool close = false;
  };

  explicit CloudSession(const ModelRegistry& registry, InferenceOptions options = {})
      : registry_(registry), options_(options) {}

  Reply handle_line(std::string_view line) {
    try {
      return handle(wire::decode(line));
    } catch (const efhmm::Error& e) {
      return error(wire::code::parse, e.what());
    }
  }

  Reply handle(const wire::Message& message) {
    if (const auto* h = std::get_if<wire::Hello>(&message)) return on_hello(*h);
    if (!model_) return error(wire::code::order, "expected HELLO first");
    if (const auto* e = std::get_if<wire::Event>(&message)) return on_event(*e);
    if (const auto* s = std::get_if<wire::Steady>(&message)) return on_steady(*s);
    if (const auto* e = std::get_if<wire::Error>(&message)) {
      Reply r;
      r.close = true;
      (void)e;
      return r;
    }
    return error(wire::code::order, "unexpected ASSIGN from edge");
  }

  /// Called on end of stream; an EVENT still waiting for its STEADY is answered with ERROR.
  Reply finish() {
    if (pending_) return error(wire::code::order, "stream ended before the STEADY following EVENT " +
                                                      std::to_string(pending_->seq));
    return {};
  }

  const StateVector& state() const noexcept { return state_; }
  std::size_t events_handled() const noexcept { return event_index_; }

 private:
  struct Pending {
    std::uint64_t seq;
    EventRecord record;
  };

  Reply error(const char* code, std::string detail) {
    Reply r;
    r.messages.emplace_back(wire::Error{code, std::move(detail)});
    r.close = true;
    return r;
  }

  bool advance(std::uint64_t seq) {
    if (last_seq_ && seq <= *last_seq_) return false;
    last_seq_ = seq;
    return true;
  }

  Reply on_hello(const wire::Hello& h) {
    if (model_) return error(wire::code::order, "duplicate HELLO");
    const HouseholdModel* model = registry_.find(h.house_id);
    if (!model) return error(wire::code::unknown_house, "no model for house '" + h.house_id + "'");
    const std::string expected = detector_config_hash(model->detector);
    if (h.detector_config_hash != expected) {
      return error(wire::code::config,
                   "detector config hash " + h.detector_config_hash + " does not match model hash " + expected);
    }
    model_ = model;
    state_ = all_off(*model_);
    Reply r;
    r.messages.emplace_back(wire::Hello{h.house_id, h.sample_rate_hz, expected});
    return r;
  }

  Reply on_event(const wire::Event& e) {
    if (!advance(e.seq)) return error(wire::code::order, "seq " + std::to_string(e.seq) + " is not increasing");
    if (pending_) {
      return error(wire::code::order, "EVENT " + std::to_string(e.seq) + " arrived before the STEADY following EVENT " +
                                          std::to_string(pending_->seq));
    }
    if (e.dsp_w == 0.0) return error(wire::code::parse, "EVENT " + std::to_string(e.seq) + " has zero dsp_w");
    EventRecord rec;
    rec.dts = e.dts_w;
    rec.dsp = e.dsp_w;
    rec.timestamp = e.t_start_s;
    pending_ = Pending{e.seq, rec};
    return {};
  }

  Reply on_steady(const wire::Steady& s) {
    if (!advance(s.seq)) return error(wire::code::order, "seq " + std::to_string(s.seq) + " is not increasing");
    Reply r;
    if (!pending_) return r;
    const EventAssignment a =
        commit_event(*model_, state_, pending_->record, s.ssp_w, event_index_++, options_, nullptr);
    wire::Assign reply;
    reply.seq = pending_->seq;
    reply.confirmed = a.confirmed;
    if (a.chosen) {
      reply.appliance_id = model_->appliances[a.chosen->appliance].id;
      reply.from_state = a.chosen->from_state;
      reply.to_state = a.chosen->to_state;
    }
    r.messages.emplace_back(std::move(reply));
    pending_.reset();
    return r;
  }

  const ModelRegistry& registry_;
  InferenceOptions options_;
  const HouseholdModel* model_ = nullptr;
  StateVector state_;
  std::optional<std::uint64_t> last_seq_;
  std::optional<Pending> pending_;
  std::size_t event_index_ = 0;
};

/// TCP front end: one thread and one CloudSession per connection.
class CloudServer {
 public:
  CloudServer(const ModelRegistry& registry, const net::Endpoint& bind, InferenceOptions options = {})
      : registry_(registry), options_(options), listener_(net::listen_tcp(bind)) {}

  CloudServer(const CloudServer&) = delete;
  CloudServer& operator=(const CloudServer&) = delete;
  ~CloudServer() { stop(); }

  std::uint16_t port() const { return net::local_port(listener_); }

  /// Accepts connections on a background thread.
  void start() {
    std::lock_guard lock(mutex_);
    if (accept_thread_.joinable()) return;
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  /// Accepts connections on the calling thread until stop() is called from elsewhere.
  void serve_forever() { accept_loop(); }

  void stop() {
    {
      std::lock_guard lock(mutex_);
      if (stopped_) return;
      stopped_ = true;
      listener_.shutdown_both();
      for (auto& c : connections_) c->shutdown_both();
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> workers;
    {
      std::lock_guard lock(mutex_);
      workers.swap(workers_);
    }
    for (auto& t : workers) t.join();
  }

  std::size_t connections_served() const {
    std::lock_guard lock(mutex_);
    return served_;
  }

 private:
  void accept_loop() {
    while (true) {
      net::Socket s = net::accept_tcp(listener_);
      std::lock_guard lock(mutex_);
      if (!s.valid() || stopped_) return;
      auto conn = std::make_shared<net::Socket>(std::move(s));
      connections_.push_back(conn);
      ++served_;
      workers_.emplace_back([this, conn] { serve(conn); });
    }
  }

  void serve(const std::shared_ptr<net::Socket>& conn) {
    CloudSession session(registry_, options_);
    const auto send = [&](const CloudSession::Reply& r) {
      for (const auto& m : r.messages) conn->send_all(wire::encode(m));
      return !r.close;
    };
    try {
      net::LineReader reader(*conn);
      while (auto line = reader.next()) {
        if (!send(session.handle_line(*line))) break;
      }
      send(session.finish());
    } catch (const efhmm::Error&) {
      // Connection dropped; the session state dies with it.
    }
    conn->shutdown_both();
    std::lock_guard lock(mutex_);
    std::erase(connections_, conn);
  }

  const ModelRegistry& registry_;
  InferenceOptions options_;
  net::Socket listener_;
  mutable std::mutex mutex_;
  bool stopped_ = false;
  std::size_t served_ = 0;
  std::thread accept_thread_;
  std::vector<std::thread> workers_;
  std::vector<std::shared_ptr<net::Socket>> connections_;
};

}  // namespace efhmm
