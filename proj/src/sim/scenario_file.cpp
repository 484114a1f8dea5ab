#include "ftfrc/sim/scenario_file.hpp"

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace ftfrc::sim {

namespace {

std::vector<std::string> tokenize(const std::string& raw) {
  std::string line = raw;
  if (const std::size_t hash = line.find('#'); hash != std::string::npos) {
    line.erase(hash);
  }
  std::istringstream ss(line);
  std::vector<std::string> toks;
  for (std::string t; ss >> t;) toks.push_back(std::move(t));
  return toks;
}

double parse_number(const std::string& tok, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw ScenarioParseError(line, "expected a number, got '" + tok + "'");
  }
  if (used != tok.size()) {
    throw ScenarioParseError(line, "trailing characters in number '" + tok + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& tok, int line) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(tok, &used);
  } catch (const std::exception&) {
    throw ScenarioParseError(line, "expected an unsigned integer, got '" + tok + "'");
  }
  if (used != tok.size()) {
    throw ScenarioParseError(line, "trailing characters in integer '" + tok + "'");
  }
  return v;
}

int parse_flow_index(const std::string& tok, int line, int flows) {
  const double v = parse_number(tok, line);
  const int f = static_cast<int>(v);
  if (v != f || f < 0) throw ScenarioParseError(line, "invalid flow index '" + tok + "'");
  if (f >= flows) {
    throw ScenarioParseError(line, "flow " + tok + " is not declared before this event");
  }
  return f;
}

void need_args(const std::vector<std::string>& toks, std::size_t lo,
               std::size_t hi, int line) {
  const std::size_t n = toks.size() - 1;
  if (n < lo || n > hi) {
    std::string expect = std::to_string(lo);
    if (hi != lo) expect += ".." + std::to_string(hi);
    throw ScenarioParseError(line, "'" + toks[0] + "' takes " + expect +
                                       " argument(s), got " + std::to_string(n));
  }
}

LinkSpec parse_link(const std::vector<std::string>& toks, std::size_t first,
                    int default_queue, int line) {
  LinkSpec l;
  l.capacity_bps = parse_number(toks[first], line);
  l.one_way_delay = parse_number(toks[first + 1], line);
  l.queue_capacity = default_queue;
  if (toks.size() > first + 2) {
    l.queue_capacity = static_cast<int>(parse_u64(toks[first + 2], line));
  }
  return l;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

}  // namespace

Scenario parse_scenario_text(std::istream& in) {
  Scenario sc;
  sc.events.clear();
  int flows = 0;
  int line = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line;
    const std::vector<std::string> toks = tokenize(raw);
    if (toks.empty()) continue;
    const std::string& key = toks[0];

    auto push_event = [&](ScenarioEvent ev) {
      if (!sc.events.empty() && ev.t <= sc.events.back().t) {
        throw ScenarioParseError(line, "event time " + fmt(ev.t) +
                                           " is not after the previous event");
      }
      sc.events.push_back(ev);
    };
    auto flow_event = [&](ScenarioEventKind kind) {
      need_args(toks, 2, 2, line);
      ScenarioEvent ev;
      ev.t = parse_number(toks[1], line);
      ev.kind = kind;
      ev.flow = parse_flow_index(toks[2], line, flows);
      push_event(ev);
    };

    if (key == "version") {
      need_args(toks, 1, 1, line);
      if (parse_u64(toks[1], line) != 1) {
        throw ScenarioParseError(line, "unsupported scenario version");
      }
    } else if (key == "duration") {
      need_args(toks, 1, 1, line);
      sc.duration = parse_number(toks[1], line);
    } else if (key == "seed") {
      need_args(toks, 1, 1, line);
      sc.seed = parse_u64(toks[1], line);
    } else if (key == "seg_size") {
      need_args(toks, 1, 1, line);
      sc.seg_size = parse_number(toks[1], line);
    } else if (key == "feedback_bytes") {
      need_args(toks, 1, 1, line);
      sc.feedback_bytes = parse_number(toks[1], line);
    } else if (key == "wireless") {
      need_args(toks, 2, 3, line);
      sc.wireless = parse_link(toks, 1, 50, line);
    } else if (key == "access") {
      need_args(toks, 2, 3, line);
      sc.access = parse_link(toks, 1, 1000, line);
    } else if (key == "reverse_capacity") {
      need_args(toks, 1, 1, line);
      sc.reverse_capacity_bps = parse_number(toks[1], line);
    } else if (key == "flow") {
      need_args(toks, 2, 2, line);
      ScenarioEvent ev;
      ev.kind = ScenarioEventKind::StartFlow;
      if (toks[1] == "tfrc") ev.flow_kind = FlowKind::Tfrc;
      else if (toks[1] == "reno") ev.flow_kind = FlowKind::Reno;
      else throw ScenarioParseError(line, "unknown flow kind '" + toks[1] + "'");
      ev.t = parse_number(toks[2], line);
      push_event(ev);
      ++flows;
    } else if (key == "disconnect") {
      need_args(toks, 1, 1, line);
      ScenarioEvent ev;
      ev.kind = ScenarioEventKind::Disconnect;
      ev.t = parse_number(toks[1], line);
      push_event(ev);
    } else if (key == "reconnect") {
      need_args(toks, 3, 4, line);
      ScenarioEvent ev;
      ev.kind = ScenarioEventKind::Reconnect;
      ev.t = parse_number(toks[1], line);
      ev.link = parse_link(toks, 2, 50, line);
      push_event(ev);
    } else if (key == "freeze") {
      flow_event(ScenarioEventKind::Freeze);
    } else if (key == "unfreeze") {
      flow_event(ScenarioEventKind::Unfreeze);
    } else if (key == "freeze_request") {
      flow_event(ScenarioEventKind::FreezeRequest);
    } else if (key == "unfreeze_request") {
      flow_event(ScenarioEventKind::UnfreezeRequest);
    } else {
      throw ScenarioParseError(line, "unknown directive '" + key + "'");
    }
  }
  try {
    validate_scenario(sc);
  } catch (const std::invalid_argument& e) {
    throw ScenarioParseError(line, e.what());
  }
  return sc;
}

Scenario parse_scenario_text(const std::string& text) {
  std::istringstream ss(text);
  return parse_scenario_text(ss);
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  return parse_scenario_text(in);
}

std::string format_scenario_text(const Scenario& sc) {
  std::ostringstream out;
  auto link_tail = [&](const LinkSpec& l) {
    out << ' ' << fmt(l.capacity_bps) << ' ' << fmt(l.one_way_delay) << ' '
        << l.queue_capacity << '\n';
  };
  out << "version 1\n";
  out << "duration " << fmt(sc.duration) << '\n';
  out << "seed " << sc.seed << '\n';
  out << "seg_size " << fmt(sc.seg_size) << '\n';
  out << "feedback_bytes " << fmt(sc.feedback_bytes) << '\n';
  out << "wireless";
  link_tail(sc.wireless);
  out << "access";
  link_tail(sc.access);
  out << "reverse_capacity " << fmt(sc.reverse_capacity_bps) << '\n';
  for (const ScenarioEvent& ev : sc.events) {
    switch (ev.kind) {
      case ScenarioEventKind::StartFlow:
        out << "flow " << (ev.flow_kind == FlowKind::Tfrc ? "tfrc" : "reno")
            << ' ' << fmt(ev.t) << '\n';
        break;
      case ScenarioEventKind::Disconnect:
        out << "disconnect " << fmt(ev.t) << '\n';
        break;
      case ScenarioEventKind::Reconnect:
        out << "reconnect " << fmt(ev.t);
        link_tail(ev.link);
        break;
      case ScenarioEventKind::Freeze:
        out << "freeze " << fmt(ev.t) << ' ' << ev.flow << '\n';
        break;
      case ScenarioEventKind::Unfreeze:
        out << "unfreeze " << fmt(ev.t) << ' ' << ev.flow << '\n';
        break;
      case ScenarioEventKind::FreezeRequest:
        out << "freeze_request " << fmt(ev.t) << ' ' << ev.flow << '\n';
        break;
      case ScenarioEventKind::UnfreezeRequest:
        out << "unfreeze_request " << fmt(ev.t) << ' ' << ev.flow << '\n';
        break;
    }
  }
  return out.str();
}

}  // namespace ftfrc::sim
