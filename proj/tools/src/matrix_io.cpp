#include "rnlmf/cli/matrix_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rnlmf::cli {

ParseError::ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& what)
    : IoError(source + ": line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r'; }

}  // namespace

Matrix parse_matrix(const std::string& text, const std::string& source) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    const std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;

    bool blank = true;
    for (char c : line) blank = blank && is_blank(c);
    if (blank) {
      if (end == text.size()) break;
      continue;
    }

    std::size_t count = 0;
    std::size_t field_start = 0;
    while (true) {
      std::size_t field_end = line.find(',', field_start);
      if (field_end == std::string_view::npos) field_end = line.size();
      std::size_t a = field_start;
      std::size_t b = field_end;
      while (a < b && is_blank(line[a])) ++a;
      while (b > a && is_blank(line[b - 1])) --b;
      const std::size_t column = a + 1;
      if (a == b) throw ParseError(source, line_no, column, "empty field");
      const char* first = line.data() + a;
      const char* last = line.data() + b;
      if (*first == '+') ++first;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) {
        throw ParseError(source, line_no, column, "not a number: '" + std::string(line.substr(a, b - a)) + "'");
      }
      values.push_back(v);
      ++count;
      if (field_end == line.size()) break;
      field_start = field_end + 1;
    }

    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw ParseError(source, line_no, 1,
                       "ragged row: expected " + std::to_string(cols) + " values, found " + std::to_string(count));
    }
    ++rows;
    if (end == text.size()) break;
  }

  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * cols + c];
  return m;
}

Matrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_matrix(buffer.str(), path.string());
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string format_matrix(const Matrix& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 24);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out.push_back(',');
      out += format_double(m(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) { write_text(path, format_matrix(m)); }

Labels read_labels(const std::filesystem::path& path) {
  const Matrix m = read_matrix(path);
  if (m.rows() != 1 && m.cols() != 1) throw IoError("'" + path.string() + "': labels must be a single row or column");
  Labels labels(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m.reshaped()(i);
    if (v != std::floor(v)) throw IoError("'" + path.string() + "': labels must be integers");
    labels[static_cast<std::size_t>(i)] = static_cast<int>(v);
  }
  return labels;
}

void write_labels(const std::filesystem::path& path, const Labels& labels) {
  std::string out;
  for (int l : labels) out += std::to_string(l) + "\n";
  write_text(path, out);
}

}  // namespace rnlmf::cli
