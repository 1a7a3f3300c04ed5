#include "usbs/state_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "usbs/errors.h"

namespace usbs {
namespace {

constexpr char kMagic[4] = {'U', 'S', 'B', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void raw(const void* p, size_t len) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(len));
  }
  void u32(std::uint32_t v) {
    v = to_little(v);
    raw(&v, sizeof v);
  }
  void u64(std::uint64_t v) {
    v = to_little(v);
    raw(&v, sizeof v);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  void reals(const double* p, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; ++i) f64(p[i]);
  }
  void vec(const Eigen::VectorXd& v) { reals(v.data(), v.size()); }
  void mat(const Eigen::MatrixXd& m) { reals(m.data(), m.size()); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  void raw(void* p, size_t len) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(len));
    if (static_cast<size_t>(in_.gcount()) != len) {
      throw ParseError("state file is truncated", 0);
    }
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, sizeof v);
    return to_little(v);
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof v);
    return to_little(v);
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  Eigen::Index count(std::uint64_t limit) {
    const std::uint64_t v = u64();
    if (v > limit) throw ParseError("state file has an implausible size", 0);
    return static_cast<Eigen::Index>(v);
  }
  Eigen::VectorXd vec(Eigen::Index len) {
    Eigen::VectorXd v(len);
    for (Eigen::Index i = 0; i < len; ++i) v(i) = f64();
    return v;
  }
  Eigen::MatrixXd mat(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
    return m;
  }

 private:
  std::istream& in_;
};

void write_stats(Writer& w, const AggregateStats& s) {
  w.f64(s.trace);
  w.f64(s.cost);
  w.vec(s.image);
}

AggregateStats read_stats(Reader& r, Eigen::Index m) {
  AggregateStats s;
  s.trace = r.f64();
  s.cost = r.f64();
  s.image = r.vec(m);
  return s;
}

constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 32;

}  // namespace

Fingerprint fingerprint(const SdpProblem& p) {
  Fingerprint fp;
  fp.n = static_cast<std::uint64_t>(p.n());
  fp.m = static_cast<std::uint64_t>(p.m());
  fp.num_ineq = static_cast<std::uint64_t>(p.num_ineq());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index i = 0; i < p.b.size(); ++i) {
    std::uint64_t bits;
    const double v = p.b(i);
    std::memcpy(&bits, &v, sizeof bits);
    bits = to_little(bits);
    unsigned char bytes[8];
    std::memcpy(bytes, &bits, 8);
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  fp.b_hash = h;
  return fp;
}

void write_state(std::ostream& out, const SdpProblem& p, const SolverState& st) {
  const Eigen::Index n = p.n();
  const Eigen::Index m = p.m();
  if (st.y.size() != m || st.model.basis.rows() != n) {
    throw DimensionError("write_state: state does not fit the problem");
  }
  Writer w(out);
  w.raw(kMagic, 4);
  w.u32(kVersion);
  const Fingerprint fp = fingerprint(p);
  w.u64(fp.n);
  w.u64(fp.m);
  w.u64(fp.num_ineq);
  w.u64(fp.b_hash);
  w.f64(p.scaling.cost_scale);
  w.f64(p.scaling.trace_scale);
  w.vec(p.scaling.row_scale);
  w.vec(st.y);
  w.vec(st.nu.size() == m ? st.nu : Eigen::VectorXd::Zero(m));
  w.f64(st.f_y);
  w.f64(st.lambda_max_y);
  w.u64(static_cast<std::uint64_t>(st.iteration));
  w.u64(static_cast<std::uint64_t>(st.descent_steps));
  w.u64(static_cast<std::uint64_t>(st.null_steps));
  w.u64(st.eig_calls);
  w.u64(static_cast<std::uint64_t>(st.model.basis.cols()));
  w.mat(st.model.basis);
  write_stats(w, st.model.xbar);
  write_stats(w, st.x.stats);
  w.u64(static_cast<std::uint64_t>(st.x.extra_w.cols()));
  w.mat(st.x.extra_w);
  w.vec(st.x.extra_lambda);
  const PrimalStore& ps = st.model.store;
  w.u64((ps.dense ? 1u : 0u) | (ps.sketch ? 2u : 0u));
  if (ps.dense) w.mat(*ps.dense);
  if (ps.sketch) {
    w.u64(ps.sketch->seed());
    w.u64(static_cast<std::uint64_t>(ps.sketch->rank()));
    w.u64(ps.sketch->stores_psi() ? 1 : 0);
    w.mat(ps.sketch->p());
  }
  if (!out) throw Error("write_state: write failed");
}

SavedState read_state(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("not a solver state file (bad magic)", 0);
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw ParseError("unsupported state version " + std::to_string(version), 0);
  }
  SavedState s;
  s.fp.n = r.u64();
  s.fp.m = r.u64();
  s.fp.num_ineq = r.u64();
  s.fp.b_hash = r.u64();
  if (s.fp.n > kMaxDim || s.fp.m > kMaxDim) {
    throw ParseError("state file has an implausible size", 0);
  }
  const auto n = static_cast<Eigen::Index>(s.fp.n);
  const auto m = static_cast<Eigen::Index>(s.fp.m);
  s.scaling.cost_scale = r.f64();
  s.scaling.trace_scale = r.f64();
  s.scaling.row_scale = r.vec(m);
  SolverState& st = s.state;
  st.y = r.vec(m);
  st.nu = r.vec(m);
  st.f_y = r.f64();
  st.lambda_max_y = r.f64();
  st.iteration = static_cast<int>(r.u64());
  st.descent_steps = static_cast<int>(r.u64());
  st.null_steps = static_cast<int>(r.u64());
  st.eig_calls = r.u64();
  const Eigen::Index k = r.count(s.fp.n);
  st.model.basis = r.mat(n, k);
  st.model.xbar = read_stats(r, m);
  st.x.stats = read_stats(r, m);
  const Eigen::Index kx = r.count(s.fp.n);
  st.x.extra_w = r.mat(n, kx);
  st.x.extra_lambda = r.vec(kx);
  const std::uint64_t flags = r.u64();
  if (flags & 1u) st.model.store.dense = r.mat(n, n);
  if (flags & 2u) {
    const std::uint64_t seed = r.u64();
    const Eigen::Index rank = r.count(s.fp.n);
    const bool store_psi = r.u64() != 0;
    st.model.store.sketch =
        NystromSketch::from_parts(seed, r.mat(n, rank), store_psi);
  }
  return s;
}

void save_state(const std::string& path, const SdpProblem& p,
                const SolverState& st) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ArgumentError("cannot write " + path);
  write_state(f, p, st);
}

SavedState load_state(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ArgumentError("cannot open " + path);
  return read_state(f);
}

void check_fingerprint(const SavedState& s, const SdpProblem& p) {
  const Fingerprint fp = fingerprint(p);
  if (!(fp == s.fp)) {
    std::ostringstream msg;
    msg << "state was saved for n=" << s.fp.n << " m=" << s.fp.m
        << " ineq=" << s.fp.num_ineq << " but the problem has n=" << fp.n
        << " m=" << fp.m << " ineq=" << fp.num_ineq;
    if (fp.n == s.fp.n && fp.m == s.fp.m && fp.num_ineq == s.fp.num_ineq) {
      msg << " (right-hand sides differ)";
    }
    throw FingerprintMismatch(msg.str());
  }
}

void write_mapping(std::ostream& out, const IndexMapping& map) {
  out << "usbs-mapping 1\n";
  out << "primal " << map.primal.size() << '\n';
  for (auto v : map.primal) out << v << '\n';
  out << "constraints " << map.constraint.size() << '\n';
  for (auto v : map.constraint) out << v << '\n';
}

IndexMapping read_mapping(std::istream& in) {
  std::string tag;
  long version = 0;
  if (!(in >> tag >> version) || tag != "usbs-mapping" || version != 1) {
    throw ParseError("not a mapping file", 1);
  }
  IndexMapping map;
  long line = 1;
  auto section = [&](const char* name, std::vector<std::int64_t>& out) {
    std::string word;
    std::int64_t count = 0;
    ++line;
    if (!(in >> word >> count) || word != name || count < 0) {
      throw ParseError(std::string("expected '") + name + " <count>'", line);
    }
    out.resize(static_cast<size_t>(count));
    for (auto& v : out) {
      ++line;
      if (!(in >> v) || v < -1) throw ParseError("bad index", line);
    }
  };
  section("primal", map.primal);
  section("constraints", map.constraint);
  return map;
}

void save_mapping(const std::string& path, const IndexMapping& map) {
  std::ofstream f(path);
  if (!f) throw ArgumentError("cannot write " + path);
  write_mapping(f, map);
}

IndexMapping load_mapping(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ArgumentError("cannot open " + path);
  return read_mapping(f);
}

}  // namespace usbs
