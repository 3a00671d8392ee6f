#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rssiloc/types.hpp"

namespace rssiloc::io {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
/// Fixed-point with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

/// Strict numeric parsing of one CSV field; throws InputError on junk.
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

std::vector<std::string> split_csv_line(std::string_view line);

using CsvRowHandler = std::function<void(const std::vector<std::string>& fields, std::size_t line)>;
/// Iterates the data rows of a CSV that must start with `header`. Blank lines
/// are skipped. InputErrors thrown by the handler become ParseErrors carrying
/// the 1-based line number.
void read_csv(std::istream& in, const std::string& source, std::string_view header, std::size_t width,
              const CsvRowHandler& on_row);

// Scenario JSON.
std::string scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(std::string_view text, const std::string& source = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const std::filesystem::path& path, const Scenario& scenario);

// Trace CSV: timestamp_ms,beacon_id,target_id,rssi_dbm
inline constexpr std::string_view kTraceHeader = "timestamp_ms,beacon_id,target_id,rssi_dbm";
void write_trace(std::ostream& out, const std::vector<RssiSample>& trace);
std::vector<RssiSample> read_trace(std::istream& in, const std::string& source = "<trace>");
std::vector<RssiSample> load_trace(const std::filesystem::path& path);
void save_trace(const std::filesystem::path& path, const std::vector<RssiSample>& trace);

// Ground-truth CSV: t_start_ms,t_end_ms,true_x_m,true_y_m
inline constexpr std::string_view kTruthHeader = "t_start_ms,t_end_ms,true_x_m,true_y_m";
void write_truth(std::ostream& out, const std::vector<GroundTruthInterval>& truth);
std::vector<GroundTruthInterval> read_truth(std::istream& in, const std::string& source = "<truth>");
std::vector<GroundTruthInterval> load_truth(const std::filesystem::path& path);
void save_truth(const std::filesystem::path& path, const std::vector<GroundTruthInterval>& truth);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace rssiloc::io
