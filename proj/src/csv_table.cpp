#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "fedad/data_pipeline.hpp"
#include "fedad/error.hpp"

namespace fedad {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

double parse_cell(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return v;
}

void format_double(std::string& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

bool is_benign_tag(const std::string& tag) { return lower(tag) == "benign"; }

RawTable parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("csv: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto names = split_fields(line);

  std::ptrdiff_t type_col = -1;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (lower(names[i]) == "type") {
      if (type_col >= 0) throw FormatError("csv: more than one 'type' column");
      type_col = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (type_col < 0) throw FormatError("csv: no 'type' column in header");

  RawTable t;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (static_cast<std::ptrdiff_t>(i) != type_col) t.header.emplace_back(names[i]);
  }
  const std::size_t width = t.header.size();
  std::vector<double> data;
  std::vector<double> row(width);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    std::size_t col = 0;
    std::string tag;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (static_cast<std::ptrdiff_t>(i) == type_col) {
        tag = std::string(fields[i]);
      } else if (col < width) {
        row[col++] = parse_cell(fields[i]);
      }
    }
    // A row with the wrong number of fields is incomplete: mark it invalid.
    if (fields.size() != names.size()) {
      std::fill(row.begin(), row.end(), std::numeric_limits<double>::quiet_NaN());
    }
    data.insert(data.end(), row.begin(), row.end());
    t.type_tags.push_back(std::move(tag));
  }
  t.rows = Matrix(t.type_tags.size(), width, std::move(data));
  return t;
}

RawTable ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_csv(in);
}

void write_csv(const RawTable& table, std::ostream& out) {
  std::string buf;
  for (const auto& h : table.header) {
    buf += h;
    buf += ',';
  }
  buf += "type\n";
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    for (double v : table.rows.row(r)) {
      format_double(buf, v);
      buf += ',';
    }
    buf += table.type_tags[r];
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

void write_csv(const RawTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(table, out);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace fedad
