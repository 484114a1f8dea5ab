#include "ftfrc/sim/trace.hpp"

#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace ftfrc::sim {

namespace {
constexpr char kMagic[8] = {'F', 'T', 'R', 'C', 'L', 'O', 'G', '1'};
constexpr std::uint32_t kBinaryVersion = 1;

// Shortest round-trippable decimal form, locale-independent.
std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lg", &back);
  if (back == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[40];
      std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
      std::sscanf(shorter, "%lg", &back);
      if (back == v) return shorter;
    }
  }
  return buf;
}

#pragma pack(push, 1)
struct BinaryRecord {
  double t;
  std::uint8_t kind;
  std::uint8_t drop;
  std::uint8_t pclass;
  std::uint8_t flow;
  std::uint8_t actor;
  std::uint8_t first_delivery;
  std::uint16_t reserved;
  std::int64_t seq;
  double value;
  double aux;
};
#pragma pack(pop)
static_assert(sizeof(BinaryRecord) == 40);
}  // namespace

std::string to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::Send: return "send";
    case TraceKind::Deliver: return "deliver";
    case TraceKind::Drop: return "drop";
    case TraceKind::FeedbackSent: return "feedback";
    case TraceKind::StateTransition: return "state";
    case TraceKind::RateChange: return "rate";
    case TraceKind::LinkDown: return "link_down";
    case TraceKind::LinkUp: return "link_up";
  }
  return "unknown";
}

std::string to_string(DropReason reason) {
  switch (reason) {
    case DropReason::None: return "none";
    case DropReason::Queue: return "queue";
    case DropReason::Disconnected: return "disconnected";
    case DropReason::Injected: return "injected";
  }
  return "unknown";
}

std::string csv_kind_label(const TraceEvent& ev) {
  if (ev.kind == TraceKind::Drop) return "drop_" + to_string(ev.drop);
  return to_string(ev.kind);
}

void write_trace_csv(const std::vector<TraceEvent>& events, std::ostream& out) {
  out << "# trace-csv v1\n";
  out << "t,kind,flow,seqno,value\n";
  for (const TraceEvent& ev : events) {
    out << format_double(ev.t) << ',' << csv_kind_label(ev) << ','
        << static_cast<int>(ev.flow) << ',' << ev.seq << ','
        << format_double(ev.value) << '\n';
  }
}

void write_trace_binary(const std::vector<TraceEvent>& events,
                        std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  const std::uint32_t version = kBinaryVersion;
  const std::uint32_t reserved = 0;
  const std::uint64_t count = events.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&reserved), sizeof reserved);
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (const TraceEvent& ev : events) {
    BinaryRecord rec{};
    rec.t = ev.t;
    rec.kind = static_cast<std::uint8_t>(ev.kind);
    rec.drop = static_cast<std::uint8_t>(ev.drop);
    rec.pclass = static_cast<std::uint8_t>(ev.pclass);
    rec.flow = ev.flow;
    rec.actor = ev.actor;
    rec.first_delivery = ev.first_delivery ? 1 : 0;
    rec.reserved = 0;
    rec.seq = ev.seq;
    rec.value = ev.value;
    rec.aux = ev.aux;
    out.write(reinterpret_cast<const char*>(&rec), sizeof rec);
  }
}

std::vector<TraceEvent> read_trace_binary(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("trace log: bad magic");
  }
  std::uint32_t version = 0;
  std::uint32_t reserved = 0;
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&reserved), sizeof reserved);
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!in) throw std::runtime_error("trace log: truncated header");
  if (version != kBinaryVersion) {
    throw std::runtime_error("trace log: unsupported version " +
                             std::to_string(version));
  }
  std::vector<TraceEvent> events;
  events.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    BinaryRecord rec{};
    in.read(reinterpret_cast<char*>(&rec), sizeof rec);
    if (!in) throw std::runtime_error("trace log: truncated at record " +
                                      std::to_string(i));
    TraceEvent ev;
    ev.t = rec.t;
    ev.kind = static_cast<TraceKind>(rec.kind);
    ev.drop = static_cast<DropReason>(rec.drop);
    ev.pclass = static_cast<PacketClass>(rec.pclass);
    ev.flow = rec.flow;
    ev.actor = rec.actor;
    ev.first_delivery = rec.first_delivery != 0;
    ev.seq = rec.seq;
    ev.value = rec.value;
    ev.aux = rec.aux;
    events.push_back(ev);
  }
  return events;
}

}  // namespace ftfrc::sim
