#include "usbs/instance_io.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

#include "usbs/errors.h"

namespace usbs {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ArgumentError("cannot open " + path);
  return f;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ArgumentError("cannot write " + path);
  return f;
}

// Whitespace token reader that remembers the line of each token.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  bool next(std::string* tok, long* line) {
    while (pos_ >= tokens_.size()) {
      std::string raw;
      if (!std::getline(in_, raw)) return false;
      ++line_;
      tokens_.clear();
      pos_ = 0;
      std::istringstream ss(raw);
      std::string t;
      while (ss >> t) tokens_.push_back(t);
    }
    *tok = tokens_[pos_++];
    *line = line_;
    return true;
  }

  double number(const char* what) {
    std::string tok;
    long line = 0;
    if (!next(&tok, &line)) {
      throw ParseError(std::string("unexpected end of file while reading ") + what,
                       line_ + 1);
    }
    try {
      size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError("bad number '" + tok + "' in " + what, line);
    }
  }

  long line() const { return line_; }

 private:
  std::istream& in_;
  std::vector<std::string> tokens_;
  size_t pos_ = 0;
  long line_ = 0;
};

}  // namespace

Graph parse_graph_mm(std::istream& in) {
  std::string raw;
  long line = 0;
  if (!std::getline(in, raw)) throw ParseError("empty MatrixMarket file", 1);
  ++line;
  std::istringstream header(raw);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix" ||
      lower(format) != "coordinate") {
    throw ParseError("expected '%%MatrixMarket matrix coordinate' header", line);
  }
  field = lower(field);
  symmetry = lower(symmetry);
  const bool pattern = field == "pattern";
  if (!pattern && field != "real" && field != "integer") {
    throw ParseError("unsupported field '" + field + "'", line);
  }
  if (symmetry != "symmetric" && symmetry != "general") {
    throw ParseError("unsupported symmetry '" + symmetry + "'", line);
  }
  const bool general = symmetry == "general";

  long rows = -1, cols = -1, nnz = -1;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.empty() || raw[0] == '%') continue;
    std::istringstream ss(raw);
    if (!(ss >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
      throw ParseError("bad size line", line);
    }
    break;
  }
  if (rows < 0) throw ParseError("missing size line", line + 1);
  if (rows != cols) throw ParseError("adjacency matrix must be square", line);

  // Keyed by (max, min) for symmetric files; (row, col) for general ones.
  std::map<std::pair<long, long>, double> acc;
  std::map<std::pair<long, long>, long> first_line;
  long seen = 0;
  while (seen < nnz && std::getline(in, raw)) {
    ++line;
    if (raw.empty() || raw[0] == '%') continue;
    std::istringstream ss(raw);
    long i = 0, j = 0;
    double w = 1.0;
    if (!(ss >> i >> j)) throw ParseError("bad entry", line);
    if (!pattern && !(ss >> w)) throw ParseError("missing value", line);
    std::string extra;
    if (ss >> extra) throw ParseError("trailing data on entry", line);
    if (i < 1 || j < 1 || i > rows || j > cols) {
      throw ParseError("index out of range", line);
    }
    ++seen;
    if (i == j) continue;
    if (general) {
      acc[{i - 1, j - 1}] += w;
      first_line.emplace(std::make_pair(i - 1, j - 1), line);
    } else {
      acc[{std::max(i, j) - 1, std::min(i, j) - 1}] += w;
    }
  }
  if (seen < nnz) {
    throw ParseError("expected " + std::to_string(nnz) + " entries, found " +
                         std::to_string(seen), line + 1);
  }

  Graph g;
  g.n = rows;
  for (const auto& [key, w] : acc) {
    const auto [i, j] = key;
    if (general) {
      const auto mirror = acc.find({j, i});
      if (mirror == acc.end() || mirror->second != w) {
        throw ParseError("general matrix is not symmetric at (" +
                             std::to_string(i + 1) + ", " + std::to_string(j + 1) + ")",
                         first_line.at(key));
      }
      if (i < j) continue;
    }
    if (w != 0.0) g.edges.push_back({i, j, w});
  }
  return g;
}

Graph read_graph_mm(const std::string& path) {
  std::ifstream f = open_in(path);
  return parse_graph_mm(f);
}

void write_graph_mm(std::ostream& out, const Graph& g) {
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << g.n << ' ' << g.n << ' ' << g.edges.size() << '\n';
  out << std::setprecision(17);
  for (const auto& e : g.edges) {
    out << std::max(e.u, e.v) + 1 << ' ' << std::min(e.u, e.v) + 1 << ' ' << e.w
        << '\n';
  }
}

void save_graph_mm(const std::string& path, const Graph& g) {
  std::ofstream f = open_out(path);
  write_graph_mm(f, g);
}

QapInstance parse_qaplib(std::istream& in) {
  TokenReader tr(in);
  const double nd = tr.number("size");
  if (nd < 1 || nd != static_cast<double>(static_cast<long>(nd))) {
    throw ParseError("size must be a positive integer", tr.line());
  }
  const auto n = static_cast<Eigen::Index>(nd);
  QapInstance q;
  q.w.resize(n, n);
  q.d.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) q.w(i, j) = tr.number("flow matrix");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) q.d(i, j) = tr.number("distance matrix");
  }
  std::string extra;
  long line = 0;
  if (tr.next(&extra, &line)) {
    throw ParseError("trailing data after distance matrix", line);
  }
  if ((q.w - q.w.transpose()).norm() > 0.0) {
    throw ParseError("flow matrix is not symmetric", tr.line());
  }
  if ((q.d - q.d.transpose()).norm() > 0.0) {
    throw ParseError("distance matrix is not symmetric", tr.line());
  }
  return q;
}

QapInstance read_qaplib(const std::string& path) {
  std::ifstream f = open_in(path);
  return parse_qaplib(f);
}

void write_qaplib(std::ostream& out, const QapInstance& q) {
  out << std::setprecision(17) << q.size() << "\n\n";
  for (const Eigen::MatrixXd* m : {&q.w, &q.d}) {
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      for (Eigen::Index j = 0; j < m->cols(); ++j) {
        out << (j ? " " : "") << (*m)(i, j);
      }
      out << '\n';
    }
    out << '\n';
  }
}

void save_qaplib(const std::string& path, const QapInstance& q) {
  std::ofstream f = open_out(path);
  write_qaplib(f, q);
}

}  // namespace usbs
