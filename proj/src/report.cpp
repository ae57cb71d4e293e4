#include "satqic/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace satqic {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* status_name(TransferStatus s) {
  switch (s) {
    case TransferStatus::Success: return "success";
    case TransferStatus::Timeout: return "timeout";
    case TransferStatus::Error: return "error";
  }
  return "error";
}

TransferStatus status_from(const std::string& s) {
  if (s == "success") return TransferStatus::Success;
  if (s == "timeout") return TransferStatus::Timeout;
  return TransferStatus::Error;
}

ordered_json spec_to_json(const ScenarioSpec& s) {
  ordered_json j;
  j["name"] = s.name;
  j["forward"] = {{"rate_bps", s.forward.data_rate_bps},
                  {"queue_packets", s.forward.queue_capacity},
                  {"plr", s.forward.plr}};
  j["reverse"] = {{"rate_bps", s.reverse.data_rate_bps},
                  {"queue_packets", s.reverse.queue_capacity},
                  {"plr", s.reverse.plr}};
  j["one_way_delay_s"] = s.one_way_delay_s;
  j["file_size"] = s.file_size;
  j["iterations"] = s.iterations;
  j["timeout_s"] = s.timeout_s;
  return j;
}

ScenarioSpec spec_from_json(const ordered_json& j) {
  ScenarioSpec s;
  s.name = j.at("name").get<std::string>();
  s.forward.data_rate_bps = j.at("forward").at("rate_bps").get<double>();
  s.forward.queue_capacity = j.at("forward").at("queue_packets").get<int>();
  s.forward.plr = j.at("forward").at("plr").get<double>();
  s.reverse.data_rate_bps = j.at("reverse").at("rate_bps").get<double>();
  s.reverse.queue_capacity = j.at("reverse").at("queue_packets").get<int>();
  s.reverse.plr = j.at("reverse").at("plr").get<double>();
  s.one_way_delay_s = j.at("one_way_delay_s").get<double>();
  s.file_size = j.at("file_size").get<uint64_t>();
  s.iterations = j.at("iterations").get<int>();
  s.timeout_s = j.at("timeout_s").get<double>();
  return s;
}

void open_or_throw(std::ofstream& out, const std::string& path) {
  out.open(path);
  if (!out) throw std::runtime_error("cannot write " + path);
}

}  // namespace

std::string results_to_json(const ResultMatrix& matrix) {
  ordered_json root;
  root["version"] = matrix.version;
  root["shuffle_seed"] = matrix.shuffle_seed;
  root["scenarios"] = ordered_json::array();

  for (const auto& spec : matrix.scenarios) {
    ordered_json sj;
    sj["name"] = spec.name;
    sj["spec"] = spec_to_json(spec);
    sj["cells"] = ordered_json::array();

    const auto& cells = matrix.cells.at(spec.name);
    for (const auto& [key, runs] : cells) {
      ordered_json cj;
      cj["client"] = key.client;
      cj["server"] = key.server;
      cj["runs"] = ordered_json::array();
      double goodput_sum = 0.0;
      int successes = 0, timeouts = 0, errors = 0;
      for (const auto& run : runs) {
        ordered_json rj;
        rj["status"] = status_name(run.status);
        if (run.status == TransferStatus::Success) {
          rj["ttc_s"] = run.time_to_completion_s;
          rj["goodput_bps"] = run.goodput_bps;
          rj["efficiency"] = run.efficiency;
          rj["redundancy"] = run.redundancy_factor;
          goodput_sum += run.goodput_bps;
          ++successes;
        } else {
          rj["ttc_s"] = nullptr;
          rj["goodput_bps"] = nullptr;
          rj["efficiency"] = 0.0;
          rj["redundancy"] = nullptr;
          (run.status == TransferStatus::Timeout ? timeouts : errors)++;
        }
        rj["trace_file"] = run.trace_file;
        rj["wire_bytes_forward"] = run.wire_bytes_forward;
        rj["wire_bytes_reverse"] = run.wire_bytes_reverse;
        rj["nonmonotone_offsets"] = run.nonmonotone_offset_count;
        cj["runs"].push_back(std::move(rj));
      }
      if (successes > 0)
        cj["mean_goodput"] = goodput_sum / successes;
      else
        cj["mean_goodput"] = nullptr;
      cj["failures"] = {{"timeout", timeouts}, {"error", errors}};
      sj["cells"].push_back(std::move(cj));
    }

    const auto agg = aggregate(cells);
    ordered_json sum;
    sum["mean_goodput_bps"] =
        agg.mean_goodput_bps ? ordered_json(*agg.mean_goodput_bps) : ordered_json(nullptr);
    sum["max_goodput_bps"] =
        agg.max_goodput_bps ? ordered_json(*agg.max_goodput_bps) : ordered_json(nullptr);
    sum["mean_efficiency"] =
        agg.mean_efficiency ? ordered_json(*agg.mean_efficiency) : ordered_json(nullptr);
    sum["max_efficiency"] =
        agg.max_efficiency ? ordered_json(*agg.max_efficiency) : ordered_json(nullptr);
    sum["timeouts"] = agg.timeouts;
    sum["errors"] = agg.errors;
    sj["summary"] = std::move(sum);
    root["scenarios"].push_back(std::move(sj));
  }
  return root.dump(2) + "\n";
}

void emit_results(const ResultMatrix& matrix, const std::string& out_dir) {
  std::ofstream out;
  open_or_throw(out, out_dir + "/result.json");
  out << results_to_json(matrix);
}

ResultMatrix parse_results(const std::string& json_text) {
  const auto root = ordered_json::parse(json_text);
  ResultMatrix m;
  m.version = root.at("version").get<std::string>();
  m.shuffle_seed = root.at("shuffle_seed").get<uint64_t>();
  for (const auto& sj : root.at("scenarios")) {
    const ScenarioSpec spec = spec_from_json(sj.at("spec"));
    m.scenarios.push_back(spec);
    auto& cells = m.cells[spec.name];
    for (const auto& cj : sj.at("cells")) {
      CellKey key{cj.at("client").get<std::string>(), cj.at("server").get<std::string>()};
      auto& runs = cells[key];
      for (const auto& rj : cj.at("runs")) {
        TransferOutcome run;
        run.status = status_from(rj.at("status").get<std::string>());
        if (run.status == TransferStatus::Success) {
          run.time_to_completion_s = rj.at("ttc_s").get<double>();
          run.goodput_bps = rj.at("goodput_bps").get<double>();
          run.efficiency = rj.at("efficiency").get<double>();
          run.redundancy_factor = rj.at("redundancy").get<double>();
        }
        run.trace_file = rj.at("trace_file").get<std::string>();
        run.wire_bytes_forward = rj.at("wire_bytes_forward").get<uint64_t>();
        run.wire_bytes_reverse = rj.at("wire_bytes_reverse").get<uint64_t>();
        run.nonmonotone_offset_count = rj.at("nonmonotone_offsets").get<uint64_t>();
        runs.push_back(std::move(run));
      }
    }
  }
  return m;
}

ResultMatrix read_results(const std::string& out_dir) {
  std::ifstream in(out_dir + "/result.json");
  if (!in) throw std::runtime_error("missing " + out_dir + "/result.json");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_results(buf.str());
}

// ---------------------------------------------------------------------------
// Plot artifacts
// ---------------------------------------------------------------------------

std::string palette_color(const std::string& cls) {
  if (cls == "first") return "#1f77b4";           // blue
  if (cls == "retransmission") return "#ff7f0e";  // orange
  if (cls == "highlight") return "#1f77b4";
  if (cls == "background") return "#c8c8c8";
  if (cls == "heat_low") return "#2c7bb6";
  if (cls == "heat_high") return "#d7191c";
  if (cls == "failure") return "#eeeeee";
  return "#000000";
}

HeatmapData render_heatmap(const ResultMatrix& matrix, const std::string& scenario) {
  const auto& cells = matrix.cells.at(scenario);
  HeatmapData data;
  data.scenario = scenario;
  for (const auto& [key, runs] : cells) {
    if (std::find(data.clients.begin(), data.clients.end(), key.client) ==
        data.clients.end())
      data.clients.push_back(key.client);
    if (std::find(data.servers.begin(), data.servers.end(), key.server) ==
        data.servers.end())
      data.servers.push_back(key.server);
  }
  std::sort(data.clients.begin(), data.clients.end());
  std::sort(data.servers.begin(), data.servers.end());

  const auto agg = aggregate(cells);
  constexpr double inf = std::numeric_limits<double>::infinity();
  double lo = inf, hi = -inf;
  for (const auto& [key, mean] : agg.cell_mean_goodput) {
    if (!mean) continue;
    lo = std::min(lo, *mean);
    hi = std::max(hi, *mean);
  }

  for (const auto& client : data.clients) {
    for (const auto& server : data.servers) {
      HeatmapCell cell;
      cell.client = client;
      cell.server = server;
      const CellKey key{client, server};
      const auto it = agg.cell_mean_goodput.find(key);
      const auto mean = it != agg.cell_mean_goodput.end() ? it->second : std::nullopt;
      if (mean) {
        cell.mean_goodput_bps = *mean;
        // min = max degenerates to 0 by convention.
        cell.normalized = hi > lo ? (*mean - lo) / (hi - lo) : 0.0;
      } else {
        int timeouts = 0, errors = 0;
        if (auto rit = cells.find(key); rit != cells.end()) {
          for (const auto& run : rit->second) {
            if (run.status == TransferStatus::Timeout) ++timeouts;
            if (run.status == TransferStatus::Error) ++errors;
          }
        }
        cell.failure_marker = timeouts > errors ? "T" : "E";
      }
      data.cells.push_back(std::move(cell));
    }
  }
  return data;
}

void write_heatmap(const HeatmapData& data, const std::string& svg_path,
                   const std::string& csv_path) {
  {
    std::ofstream csv;
    open_or_throw(csv, csv_path);
    csv << "client,server,mean_goodput_bps,marker,normalized\n";
    for (const auto& c : data.cells) {
      csv << c.client << ',' << c.server << ','
          << (c.mean_goodput_bps ? fmt_double(*c.mean_goodput_bps) : "") << ','
          << c.failure_marker << ',' << fmt_double(c.normalized) << "\n";
    }
  }

  const int cell_w = 90, cell_h = 40, margin = 110;
  const int w = margin + cell_w * static_cast<int>(data.servers.size()) + 20;
  const int h = margin + cell_h * static_cast<int>(data.clients.size()) + 20;
  std::ofstream svg;
  open_or_throw(svg, svg_path);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n";
  svg << "<text x=\"10\" y=\"20\" font-size=\"14\">" << data.scenario
      << " mean goodput (rows: clients, columns: servers)</text>\n";
  for (size_t j = 0; j < data.servers.size(); ++j)
    svg << "<text x=\"" << margin + j * cell_w + 4 << "\" y=\"" << margin - 8
        << "\" font-size=\"11\">" << data.servers[j] << "</text>\n";
  for (size_t i = 0; i < data.clients.size(); ++i)
    svg << "<text x=\"8\" y=\"" << margin + i * cell_h + cell_h / 2
        << "\" font-size=\"11\">" << data.clients[i] << "</text>\n";
  for (size_t i = 0; i < data.clients.size(); ++i) {
    for (size_t j = 0; j < data.servers.size(); ++j) {
      const auto& c = data.cells[i * data.servers.size() + j];
      const int x = margin + static_cast<int>(j) * cell_w;
      const int y = margin + static_cast<int>(i) * cell_h;
      std::string fill;
      if (c.mean_goodput_bps) {
        const int r = static_cast<int>(44 + c.normalized * (215 - 44));
        const int g = static_cast<int>(123 - c.normalized * (123 - 25));
        const int b = static_cast<int>(182 - c.normalized * (182 - 28));
        char buf[32];
        std::snprintf(buf, sizeof(buf), "rgb(%d,%d,%d)", r, g, b);
        fill = buf;
      } else {
        fill = palette_color("failure");
      }
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w
          << "\" height=\"" << cell_h << "\" fill=\"" << fill
          << "\" stroke=\"#444\"/>\n";
      std::string label;
      if (c.mean_goodput_bps) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", *c.mean_goodput_bps / 1e6);
        label = std::string(buf) + " Mbit/s";
      } else {
        label = c.failure_marker;
      }
      svg << "<text x=\"" << x + 6 << "\" y=\"" << y + cell_h / 2 + 4
          << "\" font-size=\"10\">" << label << "</text>\n";
    }
  }
  svg << "</svg>\n";
}

std::vector<CdfSeries> render_cdf(const ResultMatrix& matrix,
                                  const std::vector<std::string>& scenarios) {
  std::vector<CdfSeries> out;
  for (const auto& name : scenarios) {
    const auto agg = aggregate(matrix.cells.at(name));
    out.push_back({name, agg.efficiency_cdf});
  }
  return out;
}

void write_cdf(const std::vector<CdfSeries>& series, const std::string& svg_path,
               const std::string& csv_path) {
  {
    std::ofstream csv;
    open_or_throw(csv, csv_path);
    csv << "scenario,efficiency,cumulative_fraction\n";
    for (const auto& s : series) {
      const size_t n = s.efficiencies.size();
      for (size_t i = 0; i < n; ++i)
        csv << s.scenario << ',' << fmt_double(s.efficiencies[i]) << ','
            << fmt_double(static_cast<double>(i + 1) / static_cast<double>(n)) << "\n";
    }
  }

  const int w = 640, h = 420, ml = 60, mb = 40;
  std::ofstream svg;
  open_or_throw(svg, svg_path);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n";
  svg << "<text x=\"10\" y=\"18\" font-size=\"13\">efficiency CDF (failures at 0)</text>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - 10 << "\" y2=\""
      << h - mb << "\" stroke=\"#000\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"30\" x2=\"" << ml << "\" y2=\"" << h - mb
      << "\" stroke=\"#000\"/>\n";
  const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};
  int ci = 0;
  double max_eff = 1.0;
  for (const auto& s : series)
    for (double e : s.efficiencies) max_eff = std::max(max_eff, e);
  for (const auto& s : series) {
    const size_t n = s.efficiencies.size();
    if (n == 0) continue;
    std::ostringstream pts;
    double px = ml, py = h - mb;
    pts << px << ',' << py << ' ';
    for (size_t i = 0; i < n; ++i) {
      const double x = ml + s.efficiencies[i] / max_eff * (w - ml - 20);
      const double y = (h - mb) - static_cast<double>(i + 1) / n * (h - mb - 40);
      pts << x << ',' << py << ' ' << x << ',' << y << ' ';
      py = y;
    }
    pts << (w - 20) << ',' << py;
    svg << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\""
        << colors[ci % 5] << "\" stroke-width=\"1.5\"/>\n";
    svg << "<text x=\"" << w - 150 << "\" y=\"" << 40 + ci * 16 << "\" fill=\""
        << colors[ci % 5] << "\" font-size=\"12\">" << s.scenario << "</text>\n";
    ++ci;
  }
  svg << "</svg>\n";
}

std::optional<TimeOffsetData> render_time_offset(
    const std::vector<Trace>& iterations, const std::vector<TransferOutcome>& outcomes) {
  TimeOffsetData data;
  bool any_annotated = false;
  bool any_success = false;
  for (const auto& o : outcomes)
    if (o.status == TransferStatus::Success) any_success = true;
  data.highlighted_iteration =
      any_success ? static_cast<int>(select_median_run(outcomes)) : -1;

  for (size_t it = 0; it < iterations.size(); ++it) {
    const auto events = classify_offsets(iterations[it]);
    if (!events.empty()) any_annotated = true;
    const bool highlighted = static_cast<int>(it) == data.highlighted_iteration;
    for (const auto& e : events)
      data.points.push_back({static_cast<int>(it), e.timestamp_s, e.offset, e.length,
                             e.cls, highlighted});
    if (!iterations[it].records().empty()) data.id = iterations[it].id();
  }
  if (!any_annotated) return std::nullopt;
  return data;
}

void write_time_offset(const TimeOffsetData& data, const std::string& svg_path,
                       const std::string& csv_path) {
  {
    std::ofstream csv;
    open_or_throw(csv, csv_path);
    csv << "iteration,time_s,offset,length,class,highlighted\n";
    for (const auto& p : data.points)
      csv << p.iteration << ',' << fmt_double(p.time_s) << ',' << p.offset << ','
          << p.length << ','
          << (p.cls == OffsetClass::Retransmission ? "retransmission" : "first") << ','
          << (p.highlighted ? 1 : 0) << "\n";
  }

  double max_t = 1e-9, max_off = 1;
  for (const auto& p : data.points) {
    max_t = std::max(max_t, p.time_s);
    max_off = std::max(max_off, static_cast<double>(p.offset + p.length));
  }
  const int w = 760, h = 480, ml = 70, mb = 40;
  std::ofstream svg;
  open_or_throw(svg, svg_path);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n";
  svg << "<text x=\"10\" y=\"18\" font-size=\"13\">" << data.id.scenario << ' '
      << data.id.client << " vs " << data.id.server
      << " (time vs byte offset, highlighted = median run)</text>\n";
  // Background iterations first so the highlighted one draws on top.
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& p : data.points) {
      if (p.highlighted != (pass == 1)) continue;
      const double x = ml + p.time_s / max_t * (w - ml - 20);
      const double y = (h - mb) - static_cast<double>(p.offset) / max_off * (h - mb - 40);
      const std::string color =
          !p.highlighted ? palette_color("background")
          : p.cls == OffsetClass::Retransmission ? palette_color("retransmission")
                                                 : palette_color("first");
      svg << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"1.4\" fill=\"" << color
          << "\"/>\n";
    }
  }
  svg << "</svg>\n";
}

void write_violin_data(const ResultMatrix& matrix, const std::string& scenario,
                       const std::string& csv_path) {
  const auto agg = aggregate(matrix.cells.at(scenario));
  std::ofstream csv;
  open_or_throw(csv, csv_path);
  csv << "role,implementation,kind,value1,value2,value3\n";
  auto emit_role = [&](const char* role,
                       const std::map<std::string, std::vector<double>>& dists) {
    for (const auto& [impl, values] : dists) {
      const auto q = quartiles(values);
      csv << role << ',' << impl << ",quartiles," << fmt_double(q.q1) << ','
          << fmt_double(q.q2) << ',' << fmt_double(q.q3) << "\n";
      for (double v : values)
        csv << role << ',' << impl << ",point," << fmt_double(v) << ",,\n";
    }
  };
  emit_role("client", agg.client_role_efficiency);
  emit_role("server", agg.server_role_efficiency);
}

}  // namespace satqic
