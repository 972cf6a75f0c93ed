#pragma once

// HTTP and WebSocket front end for a running executive. Handlers never touch
// the executive's stores: reads come from the snapshot published after each
// tick and mutations go through Executive::submit.
//
// One thread per connection over Boost.Beast's synchronous API. That is
// plenty for an operator console and a few scripts.

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <sys/socket.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tro/acoustic.hpp"
#include "tro/deliberator.hpp"
#include "tro/error.hpp"
#include "tro/json_io.hpp"

namespace tro {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

// What readers see: an immutable copy of the world after a tick.
struct Snapshot {
  std::shared_ptr<const World> world;
  sim::VehicleState vehicle;
};

inline Json vehicle_json(const sim::VehicleState& v) {
  return Json{{"x", v.position.x},
              {"y", v.position.y},
              {"depth", v.position.depth},
              {"heading_deg", v.heading_deg},
              {"speed_mps", v.speed_mps},
              {"battery_wh", v.battery_wh},
              {"altitude_m", v.dvl_altitude_m ? Json(*v.dvl_altitude_m) : Json(nullptr)},
              {"descent_weights_dropped", v.descent_weights_dropped},
              {"ascent_weights_dropped", v.ascent_weights_dropped}};
}

inline Json plan_json(const World& w) {
  if (!w.exec.active_plan) return nullptr;
  return plan_report(*w.exec.active_plan, w.kb);
}

// Body of GET /state and of every telemetry message.
inline Json state_json(const Snapshot& s) {
  const auto& x = s.world->exec;
  Json j;
  j["mode"] = mode_name(x.mode);
  j["sim_clock"] = s.vehicle.t;
  j["tick"] = x.tick_count;
  j["last_seq"] = x.last_seq;
  j["active_goal"] = x.active_goal ? Json(*x.active_goal) : Json(nullptr);
  j["active_step"] = x.running ? Json(x.running->index) : Json(nullptr);
  j["goals"] = Json::array();
  for (const auto& [id, g] : x.goals) j["goals"].push_back(to_json(g));
  j["plan"] = plan_json(*s.world);
  j["violations"] = x.violations;
  j["mismatches"] = x.mismatches;
  j["vehicle"] = vehicle_json(s.vehicle);
  return j;
}

namespace detail {

inline std::optional<std::uint64_t> parse_u64(const std::string& s) {
  if (s.empty() || s.size() > 19) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

inline std::string query_param(const std::string& target, const std::string& key) {
  const auto q = target.find('?');
  if (q == std::string::npos) return {};
  std::size_t pos = q + 1;
  while (pos < target.size()) {
    auto amp = target.find('&', pos);
    if (amp == std::string::npos) amp = target.size();
    const auto kv = target.substr(pos, amp - pos);
    const auto eq = kv.find('=');
    if (kv.substr(0, eq) == key) return eq == std::string::npos ? std::string() : kv.substr(eq + 1);
    pos = amp + 1;
  }
  return {};
}

inline const Json& need(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(key, "missing field");
  return j.at(key);
}

inline std::string need_str(const Json& j, const char* key) {
  const auto& v = need(j, key);
  if (!v.is_string()) throw SchemaError(key, "expected a string");
  return v.get<std::string>();
}

inline acoustic::Command acoustic_command(const Json& j) {
  const auto kind = need_str(j, "kind");
  if (kind == "inject_goal")
    return acoustic::InjectGoal{parse_conjunction(need_str(j, "condition")),
                                parse_priority(j.value("priority", std::string("operator")))};
  if (kind == "override_plan_ref") {
    const auto id = need(j, "goal_id").get<std::uint64_t>();
    const auto idx = need(j, "plan_index").get<std::uint64_t>();
    if (id > 0xffff || idx > 0xff) throw InvalidValue("goal_id or plan_index out of range");
    return acoustic::OverridePlanRef{static_cast<std::uint16_t>(id), static_cast<std::uint8_t>(idx)};
  }
  if (kind == "abort_to_recovery") return acoustic::AbortToRecovery{};
  if (kind == "set_binding")
    return acoustic::SetBinding{Symbol(need_str(j, "symbol")),
                                Point{need(j, "x").get<double>(), need(j, "y").get<double>(), j.value("depth", 0.0)}};
  throw SchemaError("kind", "unknown acoustic command '" + kind + "'");
}

}  // namespace detail

class Service {
 public:
  // Binds immediately (port 0 picks a free one) and starts accepting. Must be
  // constructed on the executive's thread; it takes over the on_tick hook.
  Service(Executive& ex, unsigned short port, const std::string& address = "127.0.0.1") : ex_(ex) {
    try {
      const tcp::endpoint ep(net::ip::make_address(address), port);
      acceptor_.open(ep.protocol());
      acceptor_.set_option(net::socket_base::reuse_address(true));
      acceptor_.bind(ep);
      acceptor_.listen();
    } catch (const std::exception& e) {
      throw BindFailure("cannot listen on " + address + ":" + std::to_string(port) + ": " + e.what());
    }
    port_ = acceptor_.local_endpoint().port();
    publish(ex);
    ex.on_tick([this](const Executive& e) { publish(e); });
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ~Service() { stop(); }

  unsigned short port() const { return port_; }

  // Bounds how long a mutation waits for the executive to pick it up.
  void set_request_timeout(std::chrono::milliseconds t) { request_timeout_ = t; }

  void publish(const Executive& ex) {
    auto s = std::make_shared<const Snapshot>(Snapshot{std::make_shared<const World>(ex.world()), ex.vehicle()});
    {
      std::lock_guard lk(snap_mu_);
      snapshot_ = s;
      ++version_;
      recent_.emplace_back(version_, std::move(s));
      if (recent_.size() > kRecent) recent_.pop_front();
    }
    snap_cv_.notify_all();
  }

  std::shared_ptr<const Snapshot> snapshot() const {
    std::lock_guard lk(snap_mu_);
    return snapshot_;
  }

  // Call from the executive thread, or once it has stopped ticking.
  void stop() {
    if (stopping_.exchange(true)) return;
    ex_.on_tick({});
    // Wake the blocking accept with a throwaway connection.
    try {
      net::io_context io;
      tcp::socket s(io);
      s.connect(tcp::endpoint(acceptor_.local_endpoint().address(), port_));
    } catch (const std::exception&) {
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    snap_cv_.notify_all();
    std::list<Session> sessions;
    {
      std::lock_guard lk(sessions_mu_);
      for (auto& s : sessions_) ::shutdown(s.socket->native_handle(), SHUT_RDWR);
      sessions.swap(sessions_);
    }
    for (auto& s : sessions)
      if (s.thread.joinable()) s.thread.join();
    beast::error_code ec;
    acceptor_.close(ec);
  }

 private:
  struct Session {
    std::shared_ptr<tcp::socket> socket;
    std::shared_ptr<std::atomic<bool>> done;
    std::thread thread;
  };

  using Request = http::request<http::string_body>;
  using Response = http::response<http::string_body>;

  void accept_loop() {
    while (!stopping_) {
      auto sock = std::make_shared<tcp::socket>(io_);
      beast::error_code ec;
      acceptor_.accept(*sock, ec);
      if (stopping_) break;
      if (ec) continue;
      auto done = std::make_shared<std::atomic<bool>>(false);
      std::lock_guard lk(sessions_mu_);
      reap();
      sessions_.push_back(Session{sock, done, std::thread([this, sock, done] {
                                    serve_connection(*sock);
                                    *done = true;
                                  })});
    }
  }

  void reap() {
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (*it->done) {
        it->thread.join();
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  }

  void serve_connection(tcp::socket& sock) {
    beast::flat_buffer buf;
    try {
      while (!stopping_) {
        Request req;
        beast::error_code ec;
        http::read(sock, buf, req, ec);
        if (ec) return;
        if (websocket::is_upgrade(req)) {
          if (req.target() == "/telemetry") stream_telemetry(sock, req);
          else write(sock, reply(req, 404, Json{{"error", "no websocket at " + std::string(req.target())}}));
          return;
        }
        const bool keep = req.keep_alive();
        write(sock, route(req));
        if (!keep) break;
      }
      beast::error_code ec;
      sock.shutdown(tcp::socket::shutdown_send, ec);
    } catch (const std::exception&) {
      // Client went away.
    }
  }

  static void write(tcp::socket& sock, Response res) {
    res.prepare_payload();
    http::write(sock, res);
  }

  static Response reply(const Request& req, int status, const Json& body) {
    Response res{static_cast<http::status>(status), req.version()};
    res.set(http::field::content_type, "application/json");
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    res.body() = body.dump();
    return res;
  }

  Response route(const Request& req) {
    const std::string target(req.target());
    const std::string path = target.substr(0, target.find('?'));
    try {
      if (req.method() == http::verb::get) return reply(req, 200, get(path, target));
      if (req.method() == http::verb::post) return post(req, path);
      return reply(req, 405, Json{{"error", "method not allowed"}});
    } catch (const NotFound& e) {
      return reply(req, 404, Json{{"error", e.what()}});
    } catch (const std::exception& e) {
      return reply(req, 400, Json{{"error", e.what()}});
    }
  }

  struct NotFound : Error {
    using Error::Error;
  };

  Json get(const std::string& path, const std::string& target) const {
    const auto s = snapshot();
    const auto& kb = s->world->kb;
    if (path == "/state") return state_json(*s);
    if (path == "/plan") return plan_json(*s->world);
    if (path == "/beliefs") return beliefs_json(kb);
    if (path == "/bindings") return bindings_json(kb);
    if (path == "/behaviors") return behaviors_json(kb);
    if (path == "/assessments") return assessments_json(kb);
    if (path == "/events") {
      const auto raw = detail::query_param(target, "since");
      std::uint64_t since = 0;
      if (!raw.empty()) {
        const auto v = detail::parse_u64(raw);
        if (!v) throw InvalidValue("since must be a non-negative integer");
        since = *v;
      }
      Json out = Json::array();
      for (const auto& line : ex_.lines_since(since)) out.push_back(Json::parse(line));
      return out;
    }
    throw NotFound("no route GET " + path);
  }

  Response post(const Request& req, const std::string& path) {
    Json body = Json::object();
    if (!req.body().empty()) body = Json::parse(req.body());
    if (!body.is_object()) throw SchemaError("$", "expected a JSON object");

    std::optional<tro::Request> cmd;
    if (path == "/goals") {
      GoalRequest g;
      g.condition = parse_conjunction(detail::need_str(body, "condition"));
      g.priority = parse_priority(body.value("priority", std::string("operator")));
      cmd = g;
    } else if (path == "/bindings") {
      cmd = BindingRequest{Symbol(detail::need_str(body, "symbol")), value_from_json(detail::need(body, "value"))};
    } else if (path == "/commands/abort") {
      cmd = AbortRequest{};
    } else if (path == "/acoustic/send") {
      cmd = AcousticRequest{detail::acoustic_command(body)};
    } else if (path.rfind("/plans/", 0) == 0 && path.size() > 16 &&
               path.compare(path.size() - 9, 9, "/override") == 0) {
      const auto id = detail::parse_u64(path.substr(7, path.size() - 16));
      if (!id) throw NotFound("bad goal id in " + path);
      OverrideRequest o;
      o.goal_id = *id;
      const auto& steps = detail::need(body, "steps");
      if (!steps.is_array()) throw SchemaError("steps", "expected an array");
      for (const auto& st : steps) {
        if (!st.is_string()) throw SchemaError("steps", "expected strings");
        o.steps.push_back(st.get<std::string>());
      }
      cmd = o;
    } else {
      throw NotFound("no route POST " + path);
    }

    auto fut = ex_.submit(std::move(*cmd));
    if (fut.wait_for(request_timeout_) != std::future_status::ready)
      return reply(req, 503, Json{{"error", "executive did not pick up the request"}});
    const auto r = fut.get();
    return reply(req, r.status, r.body);
  }

  // Sends every published snapshot in order, starting with the current one.
  // A client that falls more than kRecent snapshots behind skips ahead.
  void stream_telemetry(tcp::socket& sock, const Request& req) {
    websocket::stream<tcp::socket&> ws(sock);
    ws.accept(req);
    std::uint64_t sent = 0;
    {
      std::lock_guard lk(snap_mu_);
      sent = version_ - 1;
    }
    while (!stopping_) {
      std::vector<std::shared_ptr<const Snapshot>> batch;
      {
        std::unique_lock lk(snap_mu_);
        snap_cv_.wait(lk, [&] { return stopping_ || version_ != sent; });
        if (stopping_) break;
        for (const auto& [v, s] : recent_)
          if (v > sent) batch.push_back(s);
        sent = version_;
      }
      ws.text(true);
      for (const auto& s : batch) ws.write(net::buffer(state_json(*s).dump()));
    }
    beast::error_code ec;
    ws.close(websocket::close_code::going_away, ec);
  }

  Executive& ex_;
  net::io_context io_;
  tcp::acceptor acceptor_{io_};
  unsigned short port_ = 0;
  std::chrono::milliseconds request_timeout_{10000};
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;

  mutable std::mutex snap_mu_;
  std::condition_variable snap_cv_;
  std::shared_ptr<const Snapshot> snapshot_;
  std::uint64_t version_ = 0;
  static constexpr std::size_t kRecent = 256;
  std::deque<std::pair<std::uint64_t, std::shared_ptr<const Snapshot>>> recent_;

  std::mutex sessions_mu_;
  std::list<Session> sessions_;
};

}  // namespace tro
