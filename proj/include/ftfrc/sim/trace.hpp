#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ftfrc::sim {

enum class TraceKind : std::uint8_t {
  Send,
  Deliver,
  Drop,
  FeedbackSent,
  StateTransition,
  RateChange,
  LinkDown,
  LinkUp,
};

enum class DropReason : std::uint8_t {
  None,
  Queue,         // DropTail overflow
  Disconnected,  // offered to, or in flight on, a disconnected link
  Injected,      // test hook
};

enum class PacketClass : std::uint8_t {
  None,
  Data,
  Control,  // feedback / ACK
};

struct TraceEvent {
  double t = 0.0;
  TraceKind kind = TraceKind::Send;
  DropReason drop = DropReason::None;
  PacketClass pclass = PacketClass::None;
  std::uint8_t flow = 0;
  std::uint8_t actor = 0;        // 0 = sender side, 1 = receiver side, 2 = link
  bool first_delivery = false;   // Deliver: false for duplicate arrivals
  std::int64_t seq = -1;
  double value = 0.0;            // bytes for packets, rate for RateChange,
                                 // new state index for StateTransition
  double aux = 0.0;              // RTT view on RateChange, old state index on
                                 // StateTransition
  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

// Streaming consumer. Sinks see every event in time order; a sink may ask the
// run loop to stop early once it has everything it needs.
class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void on_event(const TraceEvent& ev) = 0;
  virtual bool stop_requested() const { return false; }
};

class VectorTrace final : public TraceSink {
 public:
  std::vector<TraceEvent> events;
  void on_event(const TraceEvent& ev) override { events.push_back(ev); }
};

// Fan-out to several sinks; any attached sink may stop the run early.
class MultiSink final : public TraceSink {
 public:
  void add(TraceSink* sink) { sinks_.push_back(sink); }
  void on_event(const TraceEvent& ev) override {
    for (TraceSink* s : sinks_) s->on_event(ev);
  }
  bool stop_requested() const override {
    for (TraceSink* s : sinks_) {
      if (s->stop_requested()) return true;
    }
    return false;
  }

 private:
  std::vector<TraceSink*> sinks_;
};

std::string to_string(TraceKind kind);
std::string to_string(DropReason reason);
// The CSV row label: drop events fold their reason into the kind column
// (drop_queue, drop_disconnected, drop_injected).
std::string csv_kind_label(const TraceEvent& ev);

// CSV schema (see docs/formats.md): header row, then t,kind,flow,seqno,value.
void write_trace_csv(const std::vector<TraceEvent>& events, std::ostream& out);

// Compact binary log with a versioned header; read_trace_binary round-trips
// exactly and rejects foreign or truncated files.
void write_trace_binary(const std::vector<TraceEvent>& events,
                        std::ostream& out);
std::vector<TraceEvent> read_trace_binary(std::istream& in);

}  // namespace ftfrc::sim
