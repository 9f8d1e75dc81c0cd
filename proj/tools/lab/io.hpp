#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace lab {

namespace fs = std::filesystem;

/// Shortest "%.*g" text that parses back to the same double; "nan" and
/// "inf" for non-finite values. Locale independent.
std::string format_number(double v);

/// Header-first CSV with '.' decimals and '\n' line endings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(const std::vector<double>& row);
  void add_text(const std::vector<std::string>& row);
  std::string str() const;
  void write(const fs::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 when absent
  std::vector<double> values(const std::string& name) const;
};

CsvData read_csv(const fs::path& path);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
};

/// Line plot with markers, axes and a legend, as plain SVG text.
std::string svg_line_plot(const std::vector<Series>& series, const PlotSpec& spec);

}  // namespace lab
