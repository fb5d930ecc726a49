// Copyright 2026 The groundmap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "groundmap/telemetry_server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <deque>
#include <map>
#include <optional>
#include <thread>

#include "groundmap/errors.hpp"
#include "groundmap/nodes.hpp"
#include "groundmap/wire.hpp"

namespace groundmap {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

struct Outgoing {
  std::shared_ptr<const std::string> data;
  bool binary = false;
  bool patch = false;
};

Outgoing text(const nlohmann::json& j) { return {std::make_shared<const std::string>(j.dump()), false, false}; }

Outgoing binary_patch(const GridPatch& p) {
  const auto bytes = wire::encode_grid_patch(p);
  return {std::make_shared<const std::string>(bytes.begin(), bytes.end()), true, true};
}

}  // namespace

struct TelemetryServer::Impl {
  class Session;

  Impl(PipelineBus& b, TelemetryConfig c, SimClock n) : bus(b), config(c), now(std::move(n)), acceptor(ioc) {}

  PipelineBus& bus;
  TelemetryConfig config;
  SimClock now;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::optional<PipelineBus::Subscription> feed;
  std::thread io_thread;
  std::thread pump_thread;
  std::atomic<bool> running{false};
  std::atomic<std::uint16_t> bound_port{0};
  std::atomic<std::size_t> clients{0};
  std::atomic<std::uint64_t> dropped{0};

  // Owned by the io thread.
  std::map<std::uint64_t, std::shared_ptr<Session>> sessions;
  std::uint64_t next_id = 1;
  std::uint64_t driver = 0;
  TrackingState tracking = TrackingState::WaitingForImages;
  bool kill = false;
  wire::GridReconstructor map;
  std::optional<nlohmann::json> last_pose;
  std::uint64_t truth_count = 0;
  std::uint64_t frames = 0;

  void do_accept();
  void on_envelope(const PipelineEnvelope& env);
  void on_client(const std::shared_ptr<Session>& session, const std::string& text);
  void broadcast(const Outgoing& out);
  void broadcast_state();
  nlohmann::json state_for(std::uint64_t id) const {
    return wire::state_message(now(), tracking, kill, driver == id, driver != 0);
  }
  void close_session(std::uint64_t id);
};

class TelemetryServer::Impl::Session : public std::enable_shared_from_this<Session> {
 public:
  Session(Impl& server, tcp::socket socket, std::uint64_t id) : server_(server), ws_(std::move(socket)), id_(id) {}

  std::uint64_t id() const { return id_; }

  void run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  void send(Outgoing out) {
    if (closed_) {
      return;
    }
    queue_.push_back(std::move(out));
    if (queue_.size() > server_.config.send_queue_limit) {
      shed_patches();
    }
    if (!writing_) {
      do_write();
    }
  }

  void close() {
    if (closed_) {
      return;
    }
    closed_ = true;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(ws_).close();
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) {
      server_.close_session(id_);
      return;
    }
    // Latched join: current state and the full map before any delta.
    send(text(server_.state_for(id_)));
    if (server_.map.synced()) {
      send(binary_patch(server_.map.grid()));
    }
    if (server_.last_pose) {
      send(text(*server_.last_pose));
    }
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->server_.close_session(self->id_);
        return;
      }
      const std::string msg = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->server_.on_client(self, msg);
      self->do_read();
    });
  }

  void do_write() {
    if (queue_.empty() || closed_) {
      writing_ = false;
      return;
    }
    writing_ = true;
    const auto& front = queue_.front();
    ws_.binary(front.binary);
    ws_.async_write(asio::buffer(*front.data), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->server_.close_session(self->id_);
        return;
      }
      self->queue_.pop_front();
      self->do_write();
    });
  }

  /// Drops queued grid patches (never the frame being written) and queues
  /// a fresh snapshot so the client can resynchronize.
  void shed_patches() {
    const std::size_t first = writing_ ? 1 : 0;
    std::size_t shed = 0;
    for (std::size_t i = queue_.size(); i-- > first;) {
      if (queue_[i].patch) {
        queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(i));
        ++shed;
      }
    }
    if (shed > 0) {
      server_.dropped += shed;
      if (server_.map.synced()) {
        queue_.push_back(binary_patch(server_.map.grid()));
      }
    }
  }

  Impl& server_;
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<Outgoing> queue_;
  std::uint64_t id_;
  bool writing_ = false;
  bool closed_ = false;
};

void TelemetryServer::Impl::do_accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      return;  // acceptor closed
    }
    const auto id = next_id++;
    auto session = std::make_shared<Session>(*this, std::move(socket), id);
    sessions.emplace(id, session);
    clients = sessions.size();
    session->run();
    do_accept();
  });
}

void TelemetryServer::Impl::close_session(std::uint64_t id) {
  const auto it = sessions.find(id);
  if (it == sessions.end()) {
    return;
  }
  it->second->close();
  sessions.erase(it);
  clients = sessions.size();
  if (driver == id) {
    driver = 0;
    broadcast_state();
  }
}

void TelemetryServer::Impl::broadcast(const Outgoing& out) {
  for (auto& [id, s] : sessions) {
    s->send(out);
  }
}

void TelemetryServer::Impl::broadcast_state() {
  for (auto& [id, s] : sessions) {
    s->send(text(state_for(id)));
  }
}

void TelemetryServer::Impl::on_envelope(const PipelineEnvelope& env) {
  const double stamp = env.header.stamp;
  const auto& msg = *env.payload;
  if (const auto* state = std::get_if<TrackingStateMsg>(&msg)) {
    tracking = state->state;
    broadcast_state();
  } else if (const auto* k = std::get_if<KillMsg>(&msg)) {
    kill = k->engage;
    broadcast_state();
  } else if (const auto* truth = std::get_if<TruthMsg>(&msg)) {
    if (truth_count++ % 2 == 0) {
      last_pose = wire::pose_message(stamp, truth->pose, "truth", true);
      broadcast(text(*last_pose));
    }
  } else if (const auto* scaled = std::get_if<ScaledOdomMsg>(&msg)) {
    broadcast(text(wire::pose_message(stamp, scaled->pose, "scaled", scaled->scale_valid)));
  } else if (const auto* boundary = std::get_if<BoundaryMsg>(&msg)) {
    broadcast(text(wire::boundary_thumbnail_message(stamp, *boundary)));
  } else if (const auto* global = std::get_if<GlobalMapMsg>(&msg)) {
    const bool was_synced = map.synced();
    if (map.apply(global->patch) == wire::GridReconstructor::Result::NeedSnapshot) {
      if (global->snapshot) {
        map.apply(*global->snapshot);
      }
    }
    if (!map.synced()) {
      return;
    }
    broadcast(was_synced ? binary_patch(global->patch) : binary_patch(map.grid()));
  } else if (std::holds_alternative<MaskMsg>(msg)) {
    ++frames;
    broadcast(text(wire::report_tick_message(stamp, frames, map.epoch(), dropped.load())));
  }
}

void TelemetryServer::Impl::on_client(const std::shared_ptr<Session>& session, const std::string& payload) {
  const double stamp = now();
  wire::ClientMessage request;
  try {
    request = wire::parse_client_message(payload);
  } catch (const Error& e) {
    session->send(text(wire::error_message(stamp, e.what())));
    return;
  }
  const auto id = session->id();
  try {
    if (const auto* cmd = std::get_if<wire::CmdVelRequest>(&request)) {
      if (driver != id) {
        session->send(text(wire::error_message(stamp, "cmd_vel requires the driver token")));
        return;
      }
      // Clamping happens in the controller, the same path every source takes.
      bus.publish(topics::kCmdVel, publishers::kOperator, stamp,
                  CmdVelMsg{CmdVel{cmd->linear, cmd->angular, stamp, CmdSource::Teleop}});
    } else if (const auto* k = std::get_if<wire::KillRequest>(&request)) {
      if (!k->engage && driver != 0 && driver != id) {
        session->send(text(wire::error_message(stamp, "only the driver may release the kill switch")));
        return;
      }
      bus.publish(topics::kKill, publishers::kOperator, stamp, KillMsg{k->engage});
    } else if (const auto* s = std::get_if<wire::SessionRequest>(&request)) {
      if (s->action == wire::SessionRequest::Action::Acquire) {
        if (driver != 0 && driver != id) {
          session->send(text(wire::error_message(stamp, "another client holds the driver token")));
          return;
        }
        driver = id;
      } else if (driver == id) {
        driver = 0;
      }
      broadcast_state();
    }
  } catch (const Error& e) {
    session->send(text(wire::error_message(stamp, e.what())));
  }
}

TelemetryServer::TelemetryServer(PipelineBus& bus, TelemetryConfig config, SimClock now)
    : impl_(std::make_unique<Impl>(bus, config, std::move(now))) {}

TelemetryServer::~TelemetryServer() { stop(); }

void TelemetryServer::start() {
  auto& s = *impl_;
  if (s.running) {
    return;
  }
  try {
    const tcp::endpoint endpoint(asio::ip::make_address("0.0.0.0"), s.config.port);
    s.acceptor.open(endpoint.protocol());
    s.acceptor.set_option(asio::socket_base::reuse_address(true));
    s.acceptor.bind(endpoint);
    s.acceptor.listen();
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::Io, "cannot listen on port " + std::to_string(s.config.port) + ": " + e.what());
  }
  s.bound_port = s.acceptor.local_endpoint().port();
  s.feed.emplace(s.bus.subscribe({topics::kSlamState, topics::kKill, topics::kTruth, topics::kScaledOdom,
                                  topics::kBoundary, topics::kGlobalMap, topics::kCameraMask},
                                 4096));
  s.running = true;
  s.do_accept();
  s.io_thread = std::thread([&s] {
    auto guard = asio::make_work_guard(s.ioc);
    s.ioc.run();
  });
  s.pump_thread = std::thread([&s] {
    while (s.running) {
      if (auto env = s.feed->pop_wait(std::chrono::milliseconds(50))) {
        asio::post(s.ioc, [&s, e = std::move(*env)] { s.on_envelope(e); });
      }
    }
  });
}

void TelemetryServer::stop() {
  auto& s = *impl_;
  if (!s.running.exchange(false)) {
    return;
  }
  if (s.pump_thread.joinable()) {
    s.pump_thread.join();
  }
  asio::post(s.ioc, [&s] {
    beast::error_code ec;
    s.acceptor.close(ec);
    for (auto& [id, session] : s.sessions) {
      session->close();
    }
    s.sessions.clear();
    s.clients = 0;
    s.ioc.stop();
  });
  if (s.io_thread.joinable()) {
    s.io_thread.join();
  }
  s.feed.reset();
}

std::uint16_t TelemetryServer::port() const { return impl_->bound_port; }
std::size_t TelemetryServer::client_count() const { return impl_->clients; }
std::uint64_t TelemetryServer::dropped_patches() const { return impl_->dropped; }

}  // namespace groundmap
