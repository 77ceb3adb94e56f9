#include "etsync/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "etsync/errors.hpp"

namespace etsync::io {

namespace fs = std::filesystem;

std::string format_number(double x) {
  if (std::isnan(x)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  double d = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), d);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": invalid number '" + s + "'");
  }
  return d;
}

std::size_t parse_count(const std::string& s, std::size_t line) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": invalid integer '" + s + "'");
  }
  return v;
}

void expect_header(std::istream& is, const std::string& expected, const char* what) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::ParseError, std::string(what) + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected) throw Error(ErrorKind::ParseError, std::string(what) + ": unexpected header '" + line + "'");
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + p.string());
  return os;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot open " + p.string());
  return is;
}

void write_pairs(const fs::path& p, const std::string& xname, const std::string& yname,
                 const std::vector<std::pair<double, double>>& rows) {
  auto os = open_out(p);
  os << xname << ',' << yname << '\n';
  for (const auto& [x, y] : rows) os << format_number(x) << ',' << format_number(y) << '\n';
}

const char* kEventsHeader = "agent,family,k,t,dt";
const char* kWindowsHeader = "agent,k,t_start,t_end,tau,closed";

}  // namespace

void write_trace_csv(std::ostream& os, const SimTrace& trace) {
  for (std::size_t c = 0; c < trace.columns.size(); ++c) os << (c ? "," : "") << trace.columns[c];
  os << '\n';
  for (const auto& row : trace.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_number(row[c]);
    os << '\n';
  }
}

void write_events_csv(std::ostream& os, const EventLog& log) {
  os << kEventsHeader << '\n';
  for (const auto& e : log.events) {
    os << e.agent + 1 << ',' << to_string(e.family) << ',' << e.k << ',' << format_number(e.t) << ','
       << format_number(e.dt) << '\n';
  }
}

void write_windows_csv(std::ostream& os, const EventLog& log) {
  os << kWindowsHeader << '\n';
  for (const auto& w : log.windows) {
    os << w.agent + 1 << ',' << w.k << ',' << format_number(w.t_start) << ',' << format_number(w.t_end) << ','
       << format_number(w.tau) << ',' << (w.closed ? 1 : 0) << '\n';
  }
}

void write_metrics(std::ostream& os, const Metrics& m, const Scenario& sc) {
  auto kv = [&](const std::string& k, double v) { os << k << " = " << format_number(v) << '\n'; };
  os << "scenario = " << sc.name << '\n';
  kv("horizon", sc.horizon);
  kv("step", sc.step);
  kv("dwell_time_floor", sc.design.b);
  os << "samples = " << m.samples << '\n';
  kv("p_norm_initial", m.p_norm_initial);
  kv("p_norm_final", m.p_norm_final);
  kv("p_norm_ratio", m.p_norm_initial > 0.0 ? m.p_norm_final / m.p_norm_initial : 0.0);
  if (m.sync_error_final) kv("sync_error_final", *m.sync_error_final);
  if (m.sync_error_tail_max) kv("sync_error_tail_max", *m.sync_error_tail_max);
  os << "v_increase_count = " << m.v_increase_count << '\n';
  auto family = [&](const std::string& prefix, const FamilyStats& s) {
    os << prefix << ".count = " << s.count << '\n';
    kv(prefix + ".min_interval", s.min_interval);
    kv(prefix + ".mean_interval", s.mean_interval);
    os << prefix << ".max_per_unit_time = " << s.max_per_unit_time << '\n';
  };
  for (std::size_t i = 0; i < m.consensus.size(); ++i) {
    const std::string id = std::to_string(i + 1);
    family("consensus.agent" + id, m.consensus[i]);
    if (i < m.regulation.size() && m.regulation[i]) family("regulation.agent" + id, *m.regulation[i]);
  }
}

std::vector<fs::path> write_plot_data(const fs::path& dir, const SimResult& result, const Scenario& sc) {
  fs::create_directories(dir);
  std::vector<fs::path> written;
  const auto& tr = result.trace;
  const std::size_t ct = tr.column("t");
  auto series = [&](const std::string& col, const std::string& file) {
    const std::size_t c = tr.column(col);
    std::vector<std::pair<double, double>> rows;
    rows.reserve(tr.rows.size());
    for (const auto& r : tr.rows) rows.emplace_back(r[ct], r[c]);
    write_pairs(dir / file, "t", col, rows);
    written.push_back(dir / file);
  };
  const std::size_t n = sc.agents();
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t a = 1; a <= sc.model.dim(); ++a) {
      const std::string col = "v" + std::to_string(i) + "_" + std::to_string(a);
      series(col, col + ".csv");
    }
  for (std::size_t i = 1; i <= n; ++i)
    if (tr.find("y" + std::to_string(i))) series("y" + std::to_string(i), "y" + std::to_string(i) + ".csv");
  if (tr.find("y_inf")) series("y_inf", "y_inf.csv");
  for (EventFamily fam : {EventFamily::Consensus, EventFamily::Regulation}) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::pair<double, double>> rows;
      bool any = false;
      for (const auto& e : result.log.events) {
        if (e.agent != i || e.family != fam) continue;
        any = true;
        if (e.k > 0) rows.emplace_back(e.t, e.dt);
      }
      if (!any) continue;
      const std::string file = "intervals_" + std::string(to_string(fam)) + "_" + std::to_string(i + 1) + ".csv";
      write_pairs(dir / file, "t", "dt", rows);
      written.push_back(dir / file);
    }
  }
  return written;
}

void write_run(const fs::path& dir, const SimResult& result, const Scenario& sc, const std::string& scenario_text,
               const ScenarioOverrides& ov) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
  {
    auto os = open_out(dir / kTrajectoryFile);
    write_trace_csv(os, result.trace);
  }
  {
    auto os = open_out(dir / kEventsFile);
    write_events_csv(os, result.log);
  }
  {
    auto os = open_out(dir / kWindowsFile);
    write_windows_csv(os, result.log);
  }
  {
    auto os = open_out(dir / kMetricsFile);
    write_metrics(os, result.metrics, sc);
  }
  {
    auto os = open_out(dir / kScenarioFile);
    os << scenario_text;
  }
  {
    auto os = open_out(dir / kRunInfoFile);
    if (ov.horizon) os << "horizon = " << format_number(*ov.horizon) << '\n';
    if (ov.step) os << "step = " << format_number(*ov.step) << '\n';
    if (ov.unchecked) os << "unchecked = " << (*ov.unchecked ? "true" : "false") << '\n';
    if (ov.kernel) os << "kernel = " << (*ov.kernel == KernelMode::Parallel ? "parallel" : "serial") << '\n';
  }
  write_plot_data(dir / kPlotDir, result, sc);
}

SimTrace read_trace_csv(std::istream& is) {
  SimTrace tr;
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::ParseError, "trajectory: empty file");
  tr.columns = split_csv_line(line);
  std::size_t ln = 1;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != tr.columns.size()) {
      throw Error(ErrorKind::ParseError, "trajectory line " + std::to_string(ln) + ": expected " +
                                             std::to_string(tr.columns.size()) + " fields");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_number(c, ln));
    tr.rows.push_back(std::move(row));
  }
  return tr;
}

EventLog read_events_csv(std::istream& is, EventLog log) {
  expect_header(is, kEventsHeader, "events");
  std::string line;
  std::size_t ln = 1;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 5) throw Error(ErrorKind::ParseError, "events line " + std::to_string(ln) + ": expected 5 fields");
    EventRecord e;
    e.agent = parse_count(c[0], ln) - 1;
    if (c[1] == "consensus") {
      e.family = EventFamily::Consensus;
    } else if (c[1] == "regulation") {
      e.family = EventFamily::Regulation;
    } else {
      throw Error(ErrorKind::ParseError, "events line " + std::to_string(ln) + ": unknown family '" + c[1] + "'");
    }
    e.k = parse_count(c[2], ln);
    e.t = parse_number(c[3], ln);
    e.dt = parse_number(c[4], ln);
    log.events.push_back(e);
  }
  return log;
}

EventLog read_windows_csv(std::istream& is, EventLog log) {
  expect_header(is, kWindowsHeader, "consensus windows");
  std::string line;
  std::size_t ln = 1;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 6) throw Error(ErrorKind::ParseError, "windows line " + std::to_string(ln) + ": expected 6 fields");
    ConsensusWindow w;
    w.agent = parse_count(c[0], ln) - 1;
    w.k = parse_count(c[1], ln);
    w.t_start = parse_number(c[2], ln);
    w.t_end = parse_number(c[3], ln);
    w.tau = parse_number(c[4], ln);
    w.closed = parse_count(c[5], ln) != 0;
    log.windows.push_back(w);
  }
  return log;
}

std::map<std::string, std::string> read_key_values(std::istream& is) {
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

LoadedRun load_run(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::IoError, dir.string() + " is not a directory");
  LoadedRun run;
  run.scenario_text = read_text_file((dir / kScenarioFile).string());
  {
    auto is = open_in(dir / kRunInfoFile);
    const auto kv = read_key_values(is);
    auto num = [&](const std::string& k) -> std::optional<double> {
      const auto it = kv.find(k);
      if (it == kv.end()) return std::nullopt;
      return parse_number(it->second, 0);
    };
    run.overrides.horizon = num("horizon");
    run.overrides.step = num("step");
    if (const auto it = kv.find("unchecked"); it != kv.end()) run.overrides.unchecked = it->second == "true";
    if (const auto it = kv.find("kernel"); it != kv.end()) {
      run.overrides.kernel = it->second == "parallel" ? KernelMode::Parallel : KernelMode::Serial;
    }
  }
  run.scenario = parse_config(run.scenario_text, run.overrides);
  {
    auto is = open_in(dir / kTrajectoryFile);
    run.trace = read_trace_csv(is);
  }
  {
    auto is = open_in(dir / kEventsFile);
    run.log = read_events_csv(is);
  }
  {
    auto is = open_in(dir / kWindowsFile);
    run.log = read_windows_csv(is, std::move(run.log));
  }
  return run;
}

}  // namespace etsync::io
