#include <cstdio>
#include <sstream>

#include "rssiloc/eval.hpp"
#include "rssiloc/io.hpp"

namespace rssiloc::eval {

namespace {

std::string clock(TimestampMs ms) {
  const long minutes = static_cast<long>(ms / 60000);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%ld:%02ld", minutes / 60, minutes % 60);
  return buf;
}

std::string cm(double meters) { return io::format_fixed(meters * 100.0, 2); }

}  // namespace

std::string interval_label(const GroundTruthInterval& interval) {
  return clock(interval.start) + "-" + clock(interval.end);
}

std::string report_csv(const ErrorReport& report) {
  std::ostringstream out;
  out << "method";
  for (const auto& iv : report.intervals) out << ',' << interval_label(iv);
  out << ",Avg. error,Interval avg.,Valid ticks,Skipped ticks\n";
  for (const auto& row : report.rows) {
    out << row.method.label();
    for (const auto& ir : row.intervals) out << ',' << cm(ir.mean_error);
    out << ',' << cm(row.average_error) << ',' << cm(row.interval_average_error) << ',' << row.valid_ticks << ','
        << row.skipped_ticks << '\n';
  }
  return out.str();
}

std::string report_markdown(const ErrorReport& report) {
  std::ostringstream out;
  out << "Localization errors for " << report.scenario << " (cm)\n\n";
  out << "| Method |";
  for (const auto& iv : report.intervals) out << ' ' << interval_label(iv) << " |";
  out << " Avg. error | Interval avg. |\n|---|";
  for (std::size_t i = 0; i < report.intervals.size(); ++i) out << "---:|";
  out << "---:|---:|\n";
  for (const auto& row : report.rows) {
    out << "| " << row.method.label() << " |";
    for (const auto& ir : row.intervals) out << ' ' << cm(ir.mean_error) << " |";
    out << ' ' << cm(row.average_error) << " | " << cm(row.interval_average_error) << " |\n";
  }
  return out.str();
}

}  // namespace rssiloc::eval
