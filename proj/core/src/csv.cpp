#include "sae/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sae/error.hpp"

namespace sae::csv {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  out.push_back(std::move(cell));
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  }
  return out;
}

}  // namespace

Table::Table(std::vector<std::string> header, std::vector<std::vector<std::string>> rows)
    : header_(std::move(header)), rows_(std::move(rows)) {}

bool Table::has_column(std::string_view name) const {
  return std::find(header_.begin(), header_.end(), name) != header_.end();
}

std::size_t Table::column(std::string_view name) const {
  const auto it = std::find(header_.begin(), header_.end(), name);
  if (it == header_.end()) throw ValidationError("missing CSV column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header_.begin());
}

const std::string& Table::at(std::size_t row, std::string_view name) const {
  return rows_.at(row).at(column(name));
}

double Table::number(std::size_t row, std::string_view name) const {
  const auto v = optional_number(row, name);
  if (!v) {
    throw ValidationError("line " + std::to_string(line_of(row)) + ": empty value in column '" +
                          std::string(name) + "'");
  }
  return *v;
}

std::optional<double> Table::optional_number(std::size_t row, std::string_view name) const {
  const std::string& s = at(row, name);
  if (s.empty() || s == "NA") return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ValidationError("line " + std::to_string(line_of(row)) + ": '" + s +
                          "' is not a number (column '" + std::string(name) + "')");
  }
  return value;
}

std::int64_t Table::integer(std::size_t row, std::string_view name) const {
  const std::string& s = at(row, name);
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ValidationError("line " + std::to_string(line_of(row)) + ": '" + s +
                          "' is not an integer (column '" + std::string(name) + "')");
  }
  return value;
}

bool Table::flag(std::size_t row, std::string_view name) const {
  std::string s = at(row, name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "1" || s == "true" || s == "urban" || s == "u") return true;
  if (s == "0" || s == "false" || s == "rural" || s == "r") return false;
  throw ValidationError("line " + std::to_string(line_of(row)) + ": '" + s +
                        "' is not a 0/1 flag (column '" + std::string(name) + "')");
}

Table parse(std::istream& in, const std::string& source_name) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    header = split_line(line);
    break;
  }
  if (header.empty()) throw ValidationError(source_name + ": empty CSV (header row required)");
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ValidationError(source_name + " line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, found " +
                            std::to_string(cells.size()));
    }
    rows.push_back(std::move(cells));
  }
  return Table(std::move(header), std::move(rows));
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  return parse(in, path.string());
}

std::string format(double value) {
  if (std::isnan(value)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

std::string format(std::optional<double> value) { return value ? format(*value) : std::string{}; }

struct Writer::Impl {
  std::ofstream out;
  bool first = true;
};

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : impl_(std::make_unique<Impl>()) {
  impl_->out.open(path, std::ios::binary | std::ios::trunc);
  if (!impl_->out) {
    throw ValidationError("cannot write file: " + path.string());
  }
  for (const auto& h : header) cell(h);
  end_row();
}

Writer::~Writer() = default;

Writer& Writer::cell(std::string_view text) {
  if (!impl_->first) impl_->out << ',';
  impl_->first = false;
  if (text.find_first_of(",\"\n") != std::string_view::npos) {
    impl_->out << '"';
    for (char c : text) {
      if (c == '"') impl_->out << '"';
      impl_->out << c;
    }
    impl_->out << '"';
  } else {
    impl_->out << text;
  }
  return *this;
}

void Writer::end_row() {
  impl_->out << '\n';
  impl_->first = true;
}

}  // namespace sae::csv
