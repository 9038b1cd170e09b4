#pragma once

#include "pppa/qp.hpp"

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>

namespace pppa {

/// Text format:
///
///   qpb 1
///   <key> <value>        optional header lines (family, seed, rho, k, generator-id, structure)
///   n <n>
///   q <n numbers>
///   u <n numbers, inf allowed>
///   m <nnz>
///   <i> <j> <value>      nnz lines, 1-based, i <= j
///
/// Blank lines and lines starting with '#' are ignored. A triplet given as
/// (j, i) with j > i is read as (i, j). "structure tridiagonal" selects band
/// storage and rejects entries outside the band.
struct QpbFile {
  QpInstance instance;
  std::map<std::string, std::string> header;
};

class ParseError : public std::runtime_error {
 public:
  enum class Reason { Syntax, DuplicateEntry, IndexOutOfRange };

  ParseError(Reason reason, int line, const std::string& what);
  Reason reason() const noexcept { return reason_; }
  int line() const noexcept { return line_; }

 private:
  Reason reason_;
  int line_;
};

QpbFile parse_qpb(std::istream& in);
QpbFile parse_qpb_string(const std::string& text);
QpbFile read_qpb_file(const std::string& path);

/// Numbers are written in shortest round-trip form, so parse(write(x)) == x.
void write_qpb(std::ostream& out, const QpbFile& file);
std::string write_qpb_string(const QpbFile& file);
void write_qpb_file(const std::string& path, const QpbFile& file);

/// Shortest decimal text that reads back to the same double; "inf" for +inf.
std::string format_double(double v);

}  // namespace pppa
