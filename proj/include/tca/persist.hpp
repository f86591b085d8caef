#pragma once

// Model files (.tcam): a header line "TCAM v1 <kind>" followed by
// whitespace-separated keyword/number tokens. Every real is written as a C
// hexadecimal float, so a save/load round trip is bit-exact.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tca/autoenc.hpp"
#include "tca/dbn.hpp"
#include "tca/error.hpp"
#include "tca/rbm.hpp"
#include "tca/tca.hpp"

namespace tca::io {

inline constexpr std::string_view format_magic = "TCAM";
inline constexpr std::string_view format_version = "v1";

enum class ModelKind { tca, rbm, dbn, aec };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::tca: return "tca";
    case ModelKind::rbm: return "rbm";
    case ModelKind::dbn: return "dbn";
    case ModelKind::aec: return "aec";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::tca, ModelKind::rbm, ModelKind::dbn, ModelKind::aec})
    if (to_string(k) == s) return k;
  throw schema_error("unknown model kind '" + std::string(s) + "'");
}

namespace detail {

inline std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void matrix(std::string_view name, const Matrix& m) {
    out_ << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out_ << (c ? " " : "") << hex(m(r, c));
      out_ << '\n';
    }
  }

  void vector(std::string_view name, const Vector& v) {
    out_ << "vector " << name << ' ' << v.size() << '\n';
    for (Eigen::Index k = 0; k < v.size(); ++k) out_ << (k ? " " : "") << hex(v(k));
    out_ << '\n';
  }

  void tca(const TcaParams& p) {
    out_ << "tca " << tca::to_string(p.base) << '\n';
    matrix("A", p.A);
    matrix("B", p.B);
  }

  void rbm(const rbm::RbmModel& m) {
    out_ << "rbm " << tca::to_string(m.vis) << '\n';
    matrix("W", m.W);
    vector("a", m.a);
    vector("b", m.b);
    tca(m.hid);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string token() {
    std::string t;
    if (!(in_ >> t)) throw schema_error("model file: unexpected end of data");
    return t;
  }

  void expect(std::string_view word) {
    const auto t = token();
    if (t != word) throw schema_error("model file: expected '" + std::string(word) + "', found '" + t + "'");
  }

  long integer() {
    const auto t = token();
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size() || v < 0) throw schema_error("model file: bad count '" + t + "'");
    return v;
  }

  int label() {
    const auto t = token();
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size()) throw schema_error("model file: bad label '" + t + "'");
    return static_cast<int>(v);
  }

  double real() {
    const auto t = token();
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw schema_error("model file: bad number '" + t + "'");
    return v;
  }

  BaseKind base() {
    try {
      return parse_base_kind(token());
    } catch (const tca::invalid_argument& e) {
      throw schema_error(std::string("model file: ") + e.what());
    }
  }

  Matrix matrix(std::string_view name) {
    expect("matrix");
    expect(name);
    const long r = integer(), c = integer();
    Matrix m(r, c);
    for (long i = 0; i < r; ++i)
      for (long j = 0; j < c; ++j) m(i, j) = real();
    return m;
  }

  Vector vector(std::string_view name) {
    expect("vector");
    expect(name);
    const long n = integer();
    Vector v(n);
    for (long i = 0; i < n; ++i) v(i) = real();
    return v;
  }

  TcaParams tca() {
    expect("tca");
    TcaParams p;
    p.base = base();
    p.A = matrix("A");
    p.B = matrix("B");
    return p;
  }

  rbm::RbmModel rbm() {
    expect("rbm");
    rbm::RbmModel m;
    m.vis = base();
    m.W = matrix("W");
    m.a = vector("a");
    m.b = vector("b");
    m.hid = tca();
    return m;
  }

 private:
  std::istream& in_;
};

inline void write_header(std::ostream& out, ModelKind k) {
  out << format_magic << ' ' << format_version << ' ' << to_string(k) << '\n';
}

// Reads and checks the header line; returns the stored kind.
inline ModelKind read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw version_error("model file: missing header");
  std::istringstream hs(line);
  std::string magic, version, kind, extra;
  hs >> magic >> version >> kind;
  if (magic != format_magic) throw version_error("model file: bad header '" + line + "'");
  if (version != format_version) throw version_error("model file: unsupported version '" + version + "'");
  if (kind.empty() || (hs >> extra)) throw version_error("model file: malformed header '" + line + "'");
  return parse_model_kind(kind);
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write '" + path + "'");
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  return in;
}

inline void finish(Reader& r) { r.expect("end"); }

}  // namespace detail

// Kind recorded in a model file's header.
inline ModelKind peek_kind(const std::string& path) {
  auto in = detail::open_in(path);
  return detail::read_header(in);
}

inline void expect_kind(std::istream& in, ModelKind want) {
  const ModelKind got = detail::read_header(in);
  if (got != want)
    throw schema_error("model file holds a '" + std::string(to_string(got)) + "' model, expected '" +
                       std::string(to_string(want)) + "'");
}

// ---- TcaParams

inline void save(std::ostream& out, const TcaParams& p) {
  detail::write_header(out, ModelKind::tca);
  detail::Writer w(out);
  w.tca(p);
  out << "end\n";
}

inline TcaParams load_tca(std::istream& in) {
  expect_kind(in, ModelKind::tca);
  detail::Reader r(in);
  auto p = r.tca();
  detail::finish(r);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw schema_error(std::string("model file: ") + e.what());
  }
  return p;
}

// ---- RbmModel

inline void save(std::ostream& out, const rbm::RbmModel& m) {
  detail::write_header(out, ModelKind::rbm);
  detail::Writer w(out);
  w.rbm(m);
  out << "end\n";
}

inline rbm::RbmModel load_rbm(std::istream& in) {
  expect_kind(in, ModelKind::rbm);
  detail::Reader r(in);
  auto m = r.rbm();
  detail::finish(r);
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw schema_error(std::string("model file: ") + e.what());
  }
  return m;
}

// ---- DbnModel

inline void save(std::ostream& out, const dbn::DbnModel& d) {
  detail::write_header(out, ModelKind::dbn);
  detail::Writer w(out);
  out << "classes " << d.classes.size();
  for (int c : d.classes) out << ' ' << c;
  out << "\nstack " << d.stack.size() << '\n';
  for (const auto& layer : d.stack) w.rbm(layer);
  out << "top\n";
  w.rbm(d.top);
  out << "end\n";
}

inline dbn::DbnModel load_dbn(std::istream& in) {
  expect_kind(in, ModelKind::dbn);
  detail::Reader r(in);
  dbn::DbnModel d;
  r.expect("classes");
  const long C = r.integer();
  for (long k = 0; k < C; ++k) d.classes.push_back(r.label());
  r.expect("stack");
  const long L = r.integer();
  for (long l = 0; l < L; ++l) d.stack.push_back(r.rbm());
  r.expect("top");
  d.top = r.rbm();
  detail::finish(r);
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw schema_error(std::string("model file: ") + e.what());
  }
  return d;
}

// ---- AeModel

inline void save(std::ostream& out, const ae::AeModel& m) {
  detail::write_header(out, ModelKind::aec);
  detail::Writer w(out);
  out << "layers " << m.layers.size() << '\n';
  for (const auto& L : m.layers) {
    out << "layer " << tca::to_string(L.base) << ' ' << (L.tca ? "tca" : "plain") << '\n';
    w.matrix("W", L.W);
    w.vector("b", L.b);
    if (L.tca) w.tca(*L.tca);
  }
  out << "end\n";
}

inline ae::AeModel load_aec(std::istream& in) {
  expect_kind(in, ModelKind::aec);
  detail::Reader r(in);
  ae::AeModel m;
  r.expect("layers");
  const long n = r.integer();
  for (long l = 0; l < n; ++l) {
    r.expect("layer");
    ae::DenseLayer L;
    L.base = r.base();
    const auto flavour = r.token();
    if (flavour != "tca" && flavour != "plain") throw schema_error("model file: bad layer flavour '" + flavour + "'");
    L.W = r.matrix("W");
    L.b = r.vector("b");
    if (flavour == "tca") L.tca = r.tca();
    m.layers.push_back(std::move(L));
  }
  detail::finish(r);
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw schema_error(std::string("model file: ") + e.what());
  }
  return m;
}

// ---- path overloads

template <class Model>
void save_model(const std::string& path, const Model& m) {
  auto out = detail::open_out(path);
  save(out, m);
  if (!out) throw io_error("write failed for '" + path + "'");
}

inline TcaParams load_tca(const std::string& path) {
  auto in = detail::open_in(path);
  return load_tca(in);
}
inline rbm::RbmModel load_rbm(const std::string& path) {
  auto in = detail::open_in(path);
  return load_rbm(in);
}
inline dbn::DbnModel load_dbn(const std::string& path) {
  auto in = detail::open_in(path);
  return load_dbn(in);
}
inline ae::AeModel load_aec(const std::string& path) {
  auto in = detail::open_in(path);
  return load_aec(in);
}

}  // namespace tca::io
