#pragma once

#include <filesystem>
#include <string>

#include "rnlmf/common.hpp"

namespace rnlmf::cli {

/// File-system failures; the CLI maps these to exit code 1.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed CSV content, located by 1-based line and column.
class ParseError : public IoError {
 public:
  ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& what);
  [[nodiscard]] std::size_t line() const { return line_; }
  [[nodiscard]] std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// One matrix row per line, comma-separated floats, no header. Blank lines are
/// skipped; rows of differing length are rejected.
Matrix parse_matrix(const std::string& text, const std::string& source = "<string>");
Matrix read_matrix(const std::filesystem::path& path);

/// 17 significant digits, which round-trips every double exactly.
std::string format_matrix(const Matrix& m);
void write_matrix(const std::filesystem::path& path, const Matrix& m);

/// Labels as a single column of integers.
Labels read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const Labels& labels);

std::string format_double(double v);
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace rnlmf::cli
