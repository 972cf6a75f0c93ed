#pragma once

// Low-rate acoustic command link: a compact CRC-protected frame format and a
// seeded lossy channel driven by a stop-and-wait sender.
//
// Wire layout: [seq:1][kind:1][len:1][payload:len][crc16:2], CRC-16/CCITT
// (poly 0x1021, init 0xffff) over seq, kind and payload, big-endian.

#include <boost/crc.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "tro/error.hpp"
#include "tro/planner.hpp"
#include "tro/symbolic.hpp"
#include "tro/values.hpp"

namespace tro::acoustic {

inline constexpr std::size_t kMaxPayload = 64;
inline constexpr std::size_t kMaxFrame = 80;
inline constexpr int kMaxRetries = 5;

enum class FrameKind : std::uint8_t {
  inject_goal = 1,
  override_plan_ref = 2,
  abort_to_recovery = 3,
  set_binding = 4,
  ack = 5,
};

inline const char* kind_name(FrameKind k) {
  switch (k) {
    case FrameKind::inject_goal: return "inject_goal";
    case FrameKind::override_plan_ref: return "override_plan_ref";
    case FrameKind::abort_to_recovery: return "abort_to_recovery";
    case FrameKind::set_binding: return "set_binding";
    case FrameKind::ack: return "ack";
  }
  return "?";
}

struct InjectGoal {
  Conjunction condition;
  Priority priority = Priority::operator_;
  friend bool operator==(const InjectGoal&, const InjectGoal&) = default;
};

// Points the executive at one of the mission's stored plans.
struct OverridePlanRef {
  std::uint16_t goal_id = 0;
  std::uint8_t plan_index = 0;
  friend bool operator==(const OverridePlanRef&, const OverridePlanRef&) = default;
};

struct AbortToRecovery {
  std::uint8_t reason = 0;
  friend bool operator==(const AbortToRecovery&, const AbortToRecovery&) = default;
};

// Point binding with centimeter resolution.
struct SetBinding {
  Symbol symbol;
  Point point;
  friend bool operator==(const SetBinding&, const SetBinding&) = default;
};

struct Ack {
  friend bool operator==(const Ack&, const Ack&) = default;
};

using Command = std::variant<InjectGoal, OverridePlanRef, AbortToRecovery, SetBinding, Ack>;

struct Frame {
  std::uint8_t seq = 0;
  Command command;
  friend bool operator==(const Frame&, const Frame&) = default;
};

inline FrameKind kind_of(const Command& c) {
  return static_cast<FrameKind>(c.index() + 1);
}

inline std::uint16_t crc16(const std::uint8_t* data, std::size_t n) {
  boost::crc_ccitt_type crc;
  crc.process_bytes(data, n);
  return crc.checksum();
}

namespace detail {

inline void put_i32(std::vector<std::uint8_t>& out, std::int32_t v) {
  const auto u = static_cast<std::uint32_t>(v);
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(u >> s));
}

inline std::int32_t get_i32(const std::uint8_t* p) {
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) u = (u << 8) | p[i];
  return static_cast<std::int32_t>(u);
}

inline std::int32_t to_cm(double m) {
  const double cm = std::round(m * 100.0);
  if (!(std::abs(cm) < 2147483647.0)) throw InvalidValue("coordinate out of range for the acoustic encoding");
  return static_cast<std::int32_t>(cm);
}

inline std::vector<std::uint8_t> payload_of(const Command& cmd) {
  std::vector<std::uint8_t> out;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, InjectGoal>) {
          out.push_back(static_cast<std::uint8_t>(c.priority));
          const auto text = c.condition.str();
          out.insert(out.end(), text.begin(), text.end());
        } else if constexpr (std::is_same_v<T, OverridePlanRef>) {
          out.push_back(static_cast<std::uint8_t>(c.goal_id >> 8));
          out.push_back(static_cast<std::uint8_t>(c.goal_id & 0xff));
          out.push_back(c.plan_index);
        } else if constexpr (std::is_same_v<T, AbortToRecovery>) {
          out.push_back(c.reason);
        } else if constexpr (std::is_same_v<T, SetBinding>) {
          const auto& name = c.symbol.name();
          out.insert(out.end(), name.begin(), name.end());
          out.push_back(0);
          put_i32(out, to_cm(c.point.x));
          put_i32(out, to_cm(c.point.y));
          put_i32(out, to_cm(c.point.depth));
        }
      },
      cmd);
  return out;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_frame(const Frame& f) {
  const auto payload = detail::payload_of(f.command);
  if (payload.size() > kMaxPayload)
    throw PayloadTooLarge("payload of " + std::to_string(payload.size()) + " bytes exceeds " +
                          std::to_string(kMaxPayload));
  std::vector<std::uint8_t> out{f.seq, static_cast<std::uint8_t>(kind_of(f.command)),
                                static_cast<std::uint8_t>(payload.size())};
  std::vector<std::uint8_t> covered{f.seq, out[1]};
  for (auto b : payload) {
    out.push_back(b);
    covered.push_back(b);
  }
  const auto crc = crc16(covered.data(), covered.size());
  out.push_back(static_cast<std::uint8_t>(crc >> 8));
  out.push_back(static_cast<std::uint8_t>(crc & 0xff));
  return out;
}

// Total: returns a well-formed frame or throws DecodeError (CrcMismatch for
// checksum failures).
inline Frame decode_frame(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 5) throw DecodeError("frame shorter than 5 bytes");
  if (bytes.size() > kMaxFrame) throw DecodeError("frame longer than 80 bytes");
  const std::size_t len = bytes[2];
  if (len > kMaxPayload) throw DecodeError("declared payload exceeds 64 bytes");
  if (bytes.size() != 5 + len) throw DecodeError("frame length does not match declared payload");
  std::vector<std::uint8_t> covered{bytes[0], bytes[1]};
  covered.insert(covered.end(), bytes.begin() + 3, bytes.begin() + 3 + static_cast<std::ptrdiff_t>(len));
  const std::uint16_t got = static_cast<std::uint16_t>((bytes[3 + len] << 8) | bytes[4 + len]);
  if (crc16(covered.data(), covered.size()) != got) throw CrcMismatch("frame checksum mismatch");

  const std::uint8_t* p = bytes.data() + 3;
  Frame f;
  f.seq = bytes[0];
  switch (bytes[1]) {
    case static_cast<std::uint8_t>(FrameKind::inject_goal): {
      if (len < 2) throw DecodeError("inject_goal payload too short");
      if (p[0] > 2) throw DecodeError("inject_goal priority out of range");
      try {
        const std::string text(reinterpret_cast<const char*>(p + 1), len - 1);
        auto cond = parse_conjunction(text);
        if (cond.literals().empty()) throw DecodeError("inject_goal with empty condition");
        f.command = InjectGoal{std::move(cond), static_cast<Priority>(p[0])};
      } catch (const DecodeError&) {
        throw;
      } catch (const Error& e) {
        throw DecodeError(std::string("inject_goal condition: ") + e.what());
      }
      break;
    }
    case static_cast<std::uint8_t>(FrameKind::override_plan_ref):
      if (len != 3) throw DecodeError("override_plan_ref payload must be 3 bytes");
      f.command = OverridePlanRef{static_cast<std::uint16_t>((p[0] << 8) | p[1]), p[2]};
      break;
    case static_cast<std::uint8_t>(FrameKind::abort_to_recovery):
      if (len != 1) throw DecodeError("abort_to_recovery payload must be 1 byte");
      f.command = AbortToRecovery{p[0]};
      break;
    case static_cast<std::uint8_t>(FrameKind::set_binding): {
      std::size_t nul = 0;
      while (nul < len && p[nul] != 0) ++nul;
      if (nul == len || len - nul - 1 != 12) throw DecodeError("set_binding payload malformed");
      const std::string name(reinterpret_cast<const char*>(p), nul);
      if (!is_identifier(name)) throw DecodeError("set_binding symbol invalid");
      const std::uint8_t* q = p + nul + 1;
      f.command = SetBinding{Symbol(name), Point{detail::get_i32(q) / 100.0, detail::get_i32(q + 4) / 100.0,
                                                 detail::get_i32(q + 8) / 100.0}};
      break;
    }
    case static_cast<std::uint8_t>(FrameKind::ack):
      if (len != 0) throw DecodeError("ack carries no payload");
      f.command = Ack{};
      break;
    default:
      throw DecodeError("unknown frame kind " + std::to_string(bytes[1]));
  }
  return f;
}

// Channel ----------------------------------------------------------------------

struct ChannelModel {
  double drop_probability = 0.0;
  double one_way_latency_s = 8.0;
  std::uint64_t seed = 0;
};

enum class TransmitStatus {
  acked,            // applied at the vehicle and the sender saw the ack
  applied_unacked,  // applied at the vehicle, every ack was lost
  link_timeout,     // never reached the vehicle
};

inline const char* status_name(TransmitStatus s) {
  switch (s) {
    case TransmitStatus::acked: return "acked";
    case TransmitStatus::applied_unacked: return "applied_unacked";
    case TransmitStatus::link_timeout: return "link_timeout";
  }
  return "?";
}

struct TransmitResult {
  TransmitStatus status = TransmitStatus::link_timeout;
  std::uint8_t seq = 0;
  int attempts = 0;
  int retries = 0;
  double sent_at = 0.0;
  std::optional<double> acked_at;
  // Arrival time of every copy that reached the vehicle, in order.
  std::vector<double> arrivals;
  std::vector<std::uint8_t> bytes;

  bool delivered() const { return !arrivals.empty(); }
  std::optional<double> first_arrival() const {
    if (arrivals.empty()) return std::nullopt;
    return arrivals.front();
  }
};

// Vehicle side: applies each sequence number once.
class Receiver {
 public:
  // True when the frame is new and should be applied.
  bool accept(std::uint8_t seq) {
    if (last_ && *last_ == seq) return false;
    last_ = seq;
    return true;
  }
  std::optional<std::uint8_t> last_seq() const { return last_; }

 private:
  std::optional<std::uint8_t> last_;
};

// Operator side: seeded loss, stop-and-wait with up to five retransmissions.
// The whole exchange is resolved when the command is sent; the caller
// delivers the copies at their arrival times.
class Link {
 public:
  explicit Link(ChannelModel model) : model_(model), rng_(model.seed) {
    if (!(model.drop_probability >= 0.0) || model.drop_probability > 1.0)
      throw InvalidValue("drop probability must be in [0, 1]");
    if (!(model.one_way_latency_s >= 0.0)) throw InvalidValue("latency must be >= 0");
  }

  double ack_timeout() const { return 2.0 * model_.one_way_latency_s + 2.0; }
  const ChannelModel& model() const { return model_; }

  TransmitResult transmit(const Command& cmd, double now) {
    TransmitResult r;
    r.seq = next_seq_++;
    r.sent_at = now;
    r.bytes = encode_frame(Frame{r.seq, cmd});
    const double lat = model_.one_way_latency_s;
    for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
      const double t_send = now + attempt * ack_timeout();
      r.attempts = attempt + 1;
      r.retries = attempt;
      if (drop()) continue;
      r.arrivals.push_back(t_send + lat);
      if (drop()) continue;
      r.acked_at = t_send + 2.0 * lat;
      break;
    }
    r.status = r.acked_at ? TransmitStatus::acked
                          : (r.arrivals.empty() ? TransmitStatus::link_timeout : TransmitStatus::applied_unacked);
    return r;
  }

  // Sender's view: no ack after the last retry is a LinkTimeout, even when
  // a copy did reach the vehicle.
  TransmitResult send(const Command& cmd, double now) {
    TransmitResult r = transmit(cmd, now);
    if (!r.acked_at)
      throw LinkTimeout("no ack for seq " + std::to_string(r.seq) + " after " + std::to_string(r.retries) + " retries");
    return r;
  }

 private:
  bool drop() {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return u < model_.drop_probability;
  }

  ChannelModel model_;
  std::mt19937_64 rng_;
  std::uint8_t next_seq_ = 0;
};

}  // namespace tro::acoustic
