#include "rssiloc/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rssiloc/error.hpp"

namespace rssiloc::io {

using json = nlohmann::ordered_json;

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double: to_chars failed");
  return std::string(buf.data(), end);
}

std::string format_fixed(double value, int decimals) {
  if (std::isnan(value)) return "n/a";
  std::array<char, 64> buf{};
  // Avoid printing "-0.00".
  double rounded = std::round(value * std::pow(10.0, decimals)) / std::pow(10.0, decimals);
  if (rounded == 0.0) value = 0.0;
  auto [end, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed, decimals);
  if (ec != std::errc{}) throw std::runtime_error("format_fixed: to_chars failed");
  return std::string(buf.data(), end);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw InputError("expected a number, got '" + std::string(text) + "'");
  }
  return value;
}

std::int64_t parse_int(std::string_view text) {
  text = trim(text);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw InputError("expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    fields.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Scenario JSON

std::string scenario_to_json(const Scenario& s) {
  json doc;
  doc["name"] = s.name;
  doc["bounds"] = {{"min_x", s.bounds.min_x}, {"min_y", s.bounds.min_y},
                   {"max_x", s.bounds.max_x}, {"max_y", s.bounds.max_y}};
  doc["beacons"] = json::array();
  for (const auto& b : s.beacons) {
    doc["beacons"].push_back({{"id", b.beacon_id},
                              {"x", b.position.x},
                              {"y", b.position.y},
                              {"a_ref_dbm", b.a_ref},
                              {"path_loss_exp", b.path_loss_exp}});
  }
  doc["walls"] = json::array();
  for (const auto& w : s.walls) {
    doc["walls"].push_back(
        {{"x1", w.a.x}, {"y1", w.a.y}, {"x2", w.b.x}, {"y2", w.b.y}, {"attenuation_db", w.attenuation_db}});
  }
  doc["rooms"] = json::array();
  for (const auto& r : s.rooms) {
    doc["rooms"].push_back({{"name", r.name},
                            {"min_x", r.extent.min_x},
                            {"min_y", r.extent.min_y},
                            {"max_x", r.extent.max_x},
                            {"max_y", r.extent.max_y}});
  }
  doc["ground_truth"] = json::array();
  for (const auto& g : s.ground_truth) {
    doc["ground_truth"].push_back(
        {{"t_start_ms", g.start}, {"t_end_ms", g.end}, {"x", g.position.x}, {"y", g.position.y}});
  }
  return doc.dump(2) + "\n";
}

namespace {

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(where + ": field '" + key + "' has the wrong type");
  }
}

Bounds bounds_from(const json& obj, const std::string& where) {
  return {field<double>(obj, "min_x", where), field<double>(obj, "min_y", where),
          field<double>(obj, "max_x", where), field<double>(obj, "max_y", where)};
}

}  // namespace

Scenario scenario_from_json(std::string_view text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, 0, std::string("invalid JSON: ") + e.what());
  }
  Scenario s;
  try {
    s.name = field<std::string>(doc, "name", "scenario");
    s.bounds = bounds_from(doc.at("bounds"), "bounds");
    const auto& beacons = doc.at("beacons");
    for (std::size_t i = 0; i < beacons.size(); ++i) {
      const std::string where = "beacons[" + std::to_string(i) + "]";
      const auto& b = beacons[i];
      s.beacons.push_back({field<std::string>(b, "id", where),
                           {field<double>(b, "x", where), field<double>(b, "y", where)},
                           field<double>(b, "a_ref_dbm", where),
                           field<double>(b, "path_loss_exp", where)});
    }
    if (doc.contains("walls")) {
      const auto& walls = doc.at("walls");
      for (std::size_t i = 0; i < walls.size(); ++i) {
        const std::string where = "walls[" + std::to_string(i) + "]";
        const auto& w = walls[i];
        s.walls.push_back({{field<double>(w, "x1", where), field<double>(w, "y1", where)},
                           {field<double>(w, "x2", where), field<double>(w, "y2", where)},
                           field<double>(w, "attenuation_db", where)});
      }
    }
    if (doc.contains("rooms")) {
      const auto& rooms = doc.at("rooms");
      for (std::size_t i = 0; i < rooms.size(); ++i) {
        const std::string where = "rooms[" + std::to_string(i) + "]";
        s.rooms.push_back({field<std::string>(rooms[i], "name", where), bounds_from(rooms[i], where)});
      }
    }
    if (doc.contains("ground_truth")) {
      const auto& gt = doc.at("ground_truth");
      for (std::size_t i = 0; i < gt.size(); ++i) {
        const std::string where = "ground_truth[" + std::to_string(i) + "]";
        const auto& g = gt[i];
        s.ground_truth.push_back({field<TimestampMs>(g, "t_start_ms", where), field<TimestampMs>(g, "t_end_ms", where),
                                  {field<double>(g, "x", where), field<double>(g, "y", where)}});
      }
    }
    validate(s);
  } catch (const InputError& e) {
    throw ParseError(source, 0, e.what());
  } catch (const json::exception& e) {
    throw ParseError(source, 0, e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_file(path), path.string());
}

void save_scenario(const std::filesystem::path& path, const Scenario& scenario) {
  write_file(path, scenario_to_json(scenario));
}

// ---------------------------------------------------------------------------
// Trace CSV

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return in;
}

}  // namespace

void read_csv(std::istream& in, const std::string& source, std::string_view header, std::size_t width,
              const CsvRowHandler& on_row) {
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (!seen_header) {
      if (view != header) {
        throw ParseError(source, line_no, "expected header '" + std::string(header) + "'");
      }
      seen_header = true;
      continue;
    }
    auto fields = split_csv_line(view);
    if (fields.size() != width) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(width) + " fields, got " + std::to_string(fields.size()));
    }
    try {
      on_row(fields, line_no);
    } catch (const InputError& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  if (!seen_header) throw ParseError(source, 0, "missing header '" + std::string(header) + "'");
}

void write_trace(std::ostream& out, const std::vector<RssiSample>& trace) {
  out << kTraceHeader << '\n';
  for (const auto& s : trace) {
    out << s.timestamp << ',' << s.beacon_id << ',' << s.target_id << ',' << format_double(s.rssi) << '\n';
  }
}

std::vector<RssiSample> read_trace(std::istream& in, const std::string& source) {
  std::vector<RssiSample> trace;
  read_csv(in, source, kTraceHeader, 4, [&](const std::vector<std::string>& f, std::size_t line) {
    RssiSample s{parse_int(f[0]), f[1], f[2], parse_double(f[3])};
    if (s.beacon_id.empty()) throw InputError("empty beacon_id");
    validate(s);
    if (!trace.empty() && s.timestamp < trace.back().timestamp) {
      throw ParseError(source, line, "trace rows are not sorted by timestamp");
    }
    trace.push_back(std::move(s));
  });
  return trace;
}

std::vector<RssiSample> load_trace(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_trace(in, path.string());
}

void save_trace(const std::filesystem::path& path, const std::vector<RssiSample>& trace) {
  std::ostringstream out;
  write_trace(out, trace);
  write_file(path, out.str());
}

// ---------------------------------------------------------------------------
// Ground-truth CSV

void write_truth(std::ostream& out, const std::vector<GroundTruthInterval>& truth) {
  out << kTruthHeader << '\n';
  for (const auto& g : truth) {
    out << g.start << ',' << g.end << ',' << format_double(g.position.x) << ',' << format_double(g.position.y)
        << '\n';
  }
}

std::vector<GroundTruthInterval> read_truth(std::istream& in, const std::string& source) {
  std::vector<GroundTruthInterval> truth;
  read_csv(in, source, kTruthHeader, 4, [&](const std::vector<std::string>& f, std::size_t line) {
    GroundTruthInterval g{parse_int(f[0]), parse_int(f[1]), {parse_double(f[2]), parse_double(f[3])}};
    if (g.end < g.start) throw InputError("t_end_ms before t_start_ms");
    if (!truth.empty() && g.start <= truth.back().end) {
      throw ParseError(source, line, "intervals overlap or are out of order");
    }
    truth.push_back(g);
  });
  return truth;
}

std::vector<GroundTruthInterval> load_truth(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_truth(in, path.string());
}

void save_truth(const std::filesystem::path& path, const std::vector<GroundTruthInterval>& truth) {
  std::ostringstream out;
  write_truth(out, truth);
  write_file(path, out.str());
}

}  // namespace rssiloc::io
