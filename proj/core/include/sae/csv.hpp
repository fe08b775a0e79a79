#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sae::csv {

// A header-addressed table of string cells. Missing values are empty fields.
class Table {
 public:
  Table() = default;
  Table(std::vector<std::string> header, std::vector<std::vector<std::string>> rows);

  const std::vector<std::string>& header() const noexcept { return header_; }
  std::size_t rows() const noexcept { return rows_.size(); }
  bool has_column(std::string_view name) const;
  std::size_t column(std::string_view name) const;  // throws ValidationError

  const std::string& at(std::size_t row, std::string_view name) const;
  std::string text(std::size_t row, std::string_view name) const { return at(row, name); }
  double number(std::size_t row, std::string_view name) const;
  std::optional<double> optional_number(std::size_t row, std::string_view name) const;
  std::int64_t integer(std::size_t row, std::string_view name) const;
  bool flag(std::size_t row, std::string_view name) const;

  // Line number in the source file (1-based, header is line 1).
  std::size_t line_of(std::size_t row) const noexcept { return row + 2; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

Table read(const std::filesystem::path& path);
Table parse(std::istream& in, const std::string& source_name);

// Fixed-format number rendering so output files are byte-stable.
std::string format(double value);
std::string format(std::optional<double> value);

class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header);
  ~Writer();
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  Writer& cell(std::string_view text);
  Writer& cell(double value) { return cell(format(value)); }
  Writer& cell(std::optional<double> value) { return cell(format(value)); }
  Writer& cell(std::int64_t value) { return cell(std::to_string(value)); }
  Writer& cell(int value) { return cell(std::to_string(value)); }
  Writer& cell(std::size_t value) { return cell(std::to_string(value)); }
  void end_row();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sae::csv
