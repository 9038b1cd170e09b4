#include "pppa/qpb_io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

namespace pppa {

namespace {

const char* reason_name(ParseError::Reason r) {
  switch (r) {
    case ParseError::Reason::Syntax: return "syntax error";
    case ParseError::Reason::DuplicateEntry: return "duplicate entry";
    case ParseError::Reason::IndexOutOfRange: return "index out of range";
  }
  return "error";
}

std::vector<std::string> split(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> tokens;
  std::string t;
  while (ss >> t) tokens.push_back(t);
  return tokens;
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Next non-blank, non-comment line split into tokens; empty at end of input.
  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      auto tokens = split(line);
      if (tokens.empty() || tokens[0][0] == '#') continue;
      return tokens;
    }
    ++line_no_;
    return {};
  }

  int line() const { return line_no_; }

  [[noreturn]] void fail(const std::string& msg, ParseError::Reason r = ParseError::Reason::Syntax) const {
    throw ParseError(r, line_no_, msg);
  }

  double number(const std::string& s) const {
    if (s == "inf" || s == "+inf") return kInf;
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) fail("bad number '" + s + "'");
    return v;
  }

  long long integer(const std::string& s) const {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail("bad integer '" + s + "'");
    return v;
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

Vector read_vector(Reader& r, const std::vector<std::string>& tokens, const char* key, Index n) {
  if (tokens.empty() || tokens[0] != key) r.fail(std::string("expected '") + key + "'");
  if (static_cast<Index>(tokens.size()) != n + 1) {
    r.fail(std::string("'") + key + "' needs " + std::to_string(n) + " values");
  }
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = r.number(tokens[i + 1]);
  return v;
}

}  // namespace

ParseError::ParseError(Reason reason, int line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + reason_name(reason) + ": " + what),
      reason_(reason),
      line_(line) {}

QpbFile parse_qpb(std::istream& in) {
  Reader r(in);
  QpbFile file;

  auto tokens = r.next();
  if (tokens.size() != 2 || tokens[0] != "qpb" || tokens[1] != "1") r.fail("expected 'qpb 1'");

  tokens = r.next();
  while (!tokens.empty() && tokens[0] != "n") {
    if (tokens.size() != 2) r.fail("header lines are '<key> <value>'");
    file.header[tokens[0]] = tokens[1];
    tokens = r.next();
  }
  if (tokens.size() != 2) r.fail("expected 'n <size>'");
  const long long n_raw = r.integer(tokens[1]);
  if (n_raw < 1) r.fail("n must be positive");
  const Index n = static_cast<Index>(n_raw);

  Vector q = read_vector(r, r.next(), "q", n);
  Vector u = read_vector(r, r.next(), "u", n);

  tokens = r.next();
  if (tokens.size() != 2 || tokens[0] != "m") r.fail("expected 'm <nnz>'");
  const long long nnz = r.integer(tokens[1]);
  if (nnz < 0) r.fail("nnz must be nonnegative");

  auto it = file.header.find("structure");
  const bool banded = it != file.header.end() && it->second == "tridiagonal";
  if (it != file.header.end() && it->second != "tridiagonal" && it->second != "dense") {
    throw ParseError(ParseError::Reason::Syntax, 0, "unknown structure '" + it->second + "'");
  }
  SymMatrix m = banded ? SymMatrix::tridiagonal(Vector::Zero(n), Vector::Zero(std::max<Index>(n - 1, 0)))
                       : SymMatrix(n);

  std::set<std::pair<Index, Index>> seen;
  for (long long e = 0; e < nnz; ++e) {
    tokens = r.next();
    if (tokens.size() != 3) r.fail("expected '<i> <j> <value>'");
    long long i = r.integer(tokens[0]);
    long long j = r.integer(tokens[1]);
    const double v = r.number(tokens[2]);
    if (i < 1 || j < 1 || i > n || j > n) r.fail("entry outside 1..n", ParseError::Reason::IndexOutOfRange);
    if (i > j) std::swap(i, j);
    if (banded && j - i > 1) r.fail("entry outside the tridiagonal band", ParseError::Reason::IndexOutOfRange);
    if (!seen.insert({i, j}).second) {
      r.fail("(" + std::to_string(i) + ", " + std::to_string(j) + ") given twice",
             ParseError::Reason::DuplicateEntry);
    }
    m.set(static_cast<Index>(i - 1), static_cast<Index>(j - 1), v);
  }
  tokens = r.next();
  if (!tokens.empty()) r.fail("unexpected trailing content");

  file.instance.m = std::move(m);
  file.instance.q = std::move(q);
  file.instance.u = std::move(u);
  try {
    file.instance.validate();
  } catch (const Error& e) {
    throw ParseError(ParseError::Reason::Syntax, r.line(), e.what());
  }
  return file;
}

QpbFile parse_qpb_string(const std::string& text) {
  std::istringstream in(text);
  return parse_qpb(in);
}

QpbFile read_qpb_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open '" + path + "'");
  return parse_qpb(in);
}

std::string format_double(double v) {
  if (v == kInf) return "inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_qpb(std::ostream& out, const QpbFile& file) {
  const QpInstance& inst = file.instance;
  const Index n = inst.size();
  out << "qpb 1\n";
  auto header = file.header;
  header.erase("n");
  if (inst.m.is_tridiagonal()) {
    header["structure"] = "tridiagonal";
  } else if (header.count("structure") && header["structure"] == "tridiagonal") {
    header.erase("structure");
  }
  for (const auto& [key, value] : header) out << key << ' ' << value << '\n';
  out << "n " << n << '\n';
  out << 'q';
  for (Index i = 0; i < n; ++i) out << ' ' << format_double(inst.q(i));
  out << "\nu";
  for (Index i = 0; i < n; ++i) out << ' ' << format_double(inst.u(i));
  out << '\n';

  std::vector<std::tuple<Index, Index, double>> entries;
  for (Index i = 0; i < n; ++i) {
    const Index last = inst.m.is_tridiagonal() ? std::min(i + 1, n - 1) : n - 1;
    for (Index j = i; j <= last; ++j) {
      const double v = inst.m(i, j);
      if (v != 0.0) entries.emplace_back(i, j, v);
    }
  }
  out << "m " << entries.size() << '\n';
  for (const auto& [i, j, v] : entries) out << i + 1 << ' ' << j + 1 << ' ' << format_double(v) << '\n';
}

std::string write_qpb_string(const QpbFile& file) {
  std::ostringstream out;
  write_qpb(out, file);
  return out.str();
}

void write_qpb_file(const std::string& path, const QpbFile& file) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write '" + path + "'");
  write_qpb(out, file);
  if (!out) throw Error(ErrorKind::InvalidArgument, "write to '" + path + "' failed");
}

}  // namespace pppa
