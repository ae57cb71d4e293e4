#include "satqic/capture.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace satqic {

RecordFate record_fate(const PacketFate& fate) {
  if (std::holds_alternative<Delivered>(fate)) return RecordFate::Delivered;
  if (std::holds_alternative<DroppedQueueOverflow>(fate))
    return RecordFate::DroppedQueueOverflow;
  return RecordFate::DroppedRandomLoss;
}

bool PacketRecord::operator==(const PacketRecord& o) const {
  if (timestamp_ns != o.timestamp_ns || tap != o.tap || direction != o.direction ||
      size != o.size || fate != o.fate ||
      annotation.has_value() != o.annotation.has_value())
    return false;
  if (!annotation) return true;
  return annotation->kind == o.annotation->kind && annotation->offset == o.annotation->offset &&
         annotation->length == o.annotation->length &&
         annotation->packet_number == o.annotation->packet_number;
}

void Trace::record(PacketRecord rec) {
  int64_t& last = last_ts_[static_cast<int>(rec.tap)];
  if (rec.timestamp_ns < last)
    throw UsageError("out-of-order record timestamp within tap");
  last = rec.timestamp_ns;
  records_.push_back(std::move(rec));
}

int64_t to_ns(double seconds) {
  return static_cast<int64_t>(std::llround(seconds * 1e9));
}

double to_seconds(int64_t ns) { return static_cast<double>(ns) * 1e-9; }

std::optional<Annotation> annotate(const uint8_t* data, size_t size) {
  const auto pkt = decode_packet(data, size);
  if (!pkt) return std::nullopt;
  Annotation a;
  a.kind = pkt->kind;
  a.offset = pkt->offset;
  a.length = pkt->length;
  a.packet_number = pkt->packet_number;
  return a;
}

namespace {

const char* fate_token(RecordFate f) {
  switch (f) {
    case RecordFate::Delivered: return "D";
    case RecordFate::DroppedQueueOverflow: return "QO";
    case RecordFate::DroppedRandomLoss: return "RL";
  }
  return "?";
}

RecordFate parse_fate(const std::string& tok, int line_no) {
  if (tok == "D") return RecordFate::Delivered;
  if (tok == "QO") return RecordFate::DroppedQueueOverflow;
  if (tok == "RL") return RecordFate::DroppedRandomLoss;
  throw TraceFormatError("line " + std::to_string(line_no) + ": bad fate '" + tok + "'");
}

}  // namespace

void write_trace(const Trace& trace, std::ostream& out) {
  out << "#satqic-trace v1\n";
  const RunIdentity& id = trace.id();
  out << "#meta scenario=" << id.scenario << "\n";
  out << "#meta client=" << id.client << "\n";
  out << "#meta server=" << id.server << "\n";
  out << "#meta iteration=" << id.iteration << "\n";
  out << "#meta seed=" << id.seed << "\n";
  for (const auto& r : trace.records()) {
    out << r.timestamp_ns << ' ' << (r.tap == Tap::ClientSide ? 'C' : 'S') << ' '
        << (r.direction == Direction::Forward ? 'F' : 'R') << ' ' << r.size << ' '
        << fate_token(r.fate);
    if (r.annotation) {
      out << ' ' << static_cast<int>(r.annotation->kind) << ' ' << r.annotation->offset
          << ' ' << r.annotation->length << ' ' << r.annotation->packet_number;
    }
    out << '\n';
  }
}

void write_trace_file(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
  write_trace(trace, out);
}

Trace read_trace(std::istream& in) {
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line) || line != "#satqic-trace v1")
    throw TraceFormatError("line 1: missing trace header");
  line_no = 1;
  Trace trace;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream m(line);
      std::string tag, kv;
      m >> tag;
      if (tag != "#meta") continue;
      m >> kv;
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
      if (key == "scenario") trace.id().scenario = value;
      else if (key == "client") trace.id().client = value;
      else if (key == "server") trace.id().server = value;
      else if (key == "iteration") trace.id().iteration = std::stoi(value);
      else if (key == "seed") trace.id().seed = std::stoull(value);
      continue;
    }
    std::istringstream rec(line);
    PacketRecord r;
    std::string tap, dir, fate;
    if (!(rec >> r.timestamp_ns >> tap >> dir >> r.size >> fate))
      throw TraceFormatError("line " + std::to_string(line_no) + ": malformed record");
    if (tap != "C" && tap != "S")
      throw TraceFormatError("line " + std::to_string(line_no) + ": bad tap '" + tap + "'");
    if (dir != "F" && dir != "R")
      throw TraceFormatError("line " + std::to_string(line_no) + ": bad direction '" + dir + "'");
    r.tap = tap == "C" ? Tap::ClientSide : Tap::ServerSide;
    r.direction = dir == "F" ? Direction::Forward : Direction::Reverse;
    r.fate = parse_fate(fate, line_no);
    int kind;
    if (rec >> kind) {
      Annotation a;
      if (kind < 0 || kind > 3)
        throw TraceFormatError("line " + std::to_string(line_no) + ": bad kind");
      a.kind = static_cast<PacketKind>(kind);
      if (!(rec >> a.offset >> a.length >> a.packet_number))
        throw TraceFormatError("line " + std::to_string(line_no) + ": truncated annotation");
      r.annotation = a;
    }
    std::string extra;
    if (rec >> extra)
      throw TraceFormatError("line " + std::to_string(line_no) + ": trailing fields");
    trace.record(std::move(r));
  }
  return trace;
}

Trace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  return read_trace(in);
}

}  // namespace satqic
