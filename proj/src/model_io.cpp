#include "gse/model_io.hpp"

#include "gse/errors.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace gse {

namespace {

constexpr char kMagic[8] = {'G', 'S', 'E', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(char(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.put(char((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.put(char((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void matrix(const Matrix& m) {
    u64(std::uint64_t(m.rows()));
    u64(std::uint64_t(m.cols()));
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  void vector(const Vector& v) {
    u64(std::uint64_t(v.size()));
    for (Index i = 0; i < v.size(); ++i) f64(v(i));
  }
  void str(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), std::streamsize(s.size()));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  std::uint8_t u8() {
    int c = in_.get();
    if (c < 0) fail();
    return std::uint8_t(c);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  Matrix matrix() {
    std::uint64_t r = u64(), c = u64();
    if (r > (1u << 24) || c > (1u << 24)) fail();
    Matrix m(static_cast<Index>(r), static_cast<Index>(c));
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) m(i, j) = f64();
    return m;
  }
  Vector vector() {
    std::uint64_t nv = u64();
    if (nv > (1u << 28)) fail();
    Vector v(static_cast<Index>(nv));
    for (Index i = 0; i < v.size(); ++i) v(i) = f64();
    return v;
  }
  std::string str() {
    std::uint64_t len = u64();
    if (len > (1u << 20)) fail();
    std::string s(len, '\0');
    in_.read(s.data(), std::streamsize(len));
    if (!in_) fail();
    return s;
  }
  [[noreturn]] void fail() const {
    throw IoError("'" + path_ + "' is truncated or not a valid model file");
  }

 private:
  std::istream& in_;
  std::string path_;
};

}  // namespace

void save_model(const GseModel& m, const std::string& path, std::uint64_t seed,
                std::uint64_t config_hash) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    Writer w(out);
    out.write(kMagic, sizeof(kMagic));
    w.u32(kVersion);
    w.u32(0x01020304u);  // byte-order marker

    const HyperParams& hp = m.params();
    w.u8(hp.variant == Variant::Ogse ? 1 : 0);
    w.u8(hp.reconstruct_via_field ? 1 : 0);
    w.u64(std::uint64_t(hp.q));
    w.f64(hp.eps1);
    w.f64(hp.eps2);
    w.f64(hp.eps3);
    w.f64(hp.eps3_rel);
    w.f64(hp.eps4);
    w.u64(std::uint64_t(hp.ogse_max_iter));
    w.f64(hp.ogse_tol);
    w.f64(hp.v_cutoff);
    w.u64(std::uint64_t(hp.dense_eig_limit));
    w.u64(seed);
    w.u64(config_hash);

    w.matrix(m.sample_points());
    const auto& frames = m.frames();
    w.u64(frames.size());
    for (const auto& f : frames) {
      w.matrix(f.basis);
      w.vector(f.eigenvalues);
      w.u8(f.in_domain ? 1 : 0);
      w.u8(f.degenerate ? 1 : 0);
    }
    const AlignmentField& a = m.alignment();
    for (const auto& v : a.v_star) w.matrix(v);
    w.u8(a.v_ortho.empty() ? 0 : 1);
    for (const auto& v : a.v_ortho) w.matrix(v);
    w.vector(a.eigenvalues);
    w.u8(a.spectral_gap_warning ? 1 : 0);
    w.f64(a.delta_v);
    w.u32(std::uint32_t(a.ogse_iterations));
    w.u8(a.ogse_converged ? 1 : 0);

    w.matrix(m.h_set());
    w.matrix(m.sample_embeddings());

    const FitSummary& s = m.summary();
    w.f64(s.delta_v);
    w.f64(s.delta_h);
    w.f64(s.delta_h_tangent);
    w.f64(s.spectral_gap);
    w.u32(std::uint32_t(s.ogse_iterations));
    w.u8(s.ogse_converged ? 1 : 0);
    w.f64(s.ogse_dropped);
    w.u64(std::uint64_t(s.degenerate_frames));
    w.u64(s.warnings.size());
    for (const auto& warning : s.warnings) w.str(warning);
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

GseModel load_model(const std::string& path, ModelProvenance* provenance) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  Reader r(in, path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("'" + path + "' is not a model file (bad magic)");
  }
  std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw IoError("'" + path + "' has unsupported model version " + std::to_string(version));
  }
  if (r.u32() != 0x01020304u) {
    throw IoError("'" + path + "' was written with an incompatible byte order");
  }

  HyperParams hp;
  hp.variant = r.u8() ? Variant::Ogse : Variant::Gse;
  hp.reconstruct_via_field = r.u8() != 0;
  hp.q = Index(r.u64());
  hp.eps1 = r.f64();
  hp.eps2 = r.f64();
  hp.eps3 = r.f64();
  hp.eps3_rel = r.f64();
  hp.eps4 = r.f64();
  hp.ogse_max_iter = int(r.u64());
  hp.ogse_tol = r.f64();
  hp.v_cutoff = r.f64();
  hp.dense_eig_limit = Index(r.u64());
  ModelProvenance prov;
  prov.version = version;
  prov.seed = r.u64();
  prov.config_hash = r.u64();
  if (provenance) *provenance = prov;

  Matrix points = r.matrix();
  std::uint64_t n = r.u64();
  if (n != std::uint64_t(points.rows())) r.fail();
  std::vector<TangentFrame> frames(n);
  for (auto& f : frames) {
    f.basis = r.matrix();
    f.eigenvalues = r.vector();
    f.in_domain = r.u8() != 0;
    f.degenerate = r.u8() != 0;
  }
  AlignmentField a;
  a.v_star.resize(n);
  for (auto& v : a.v_star) v = r.matrix();
  if (r.u8()) {
    a.v_ortho.resize(n);
    for (auto& v : a.v_ortho) v = r.matrix();
  }
  a.eigenvalues = r.vector();
  a.spectral_gap_warning = r.u8() != 0;
  a.delta_v = r.f64();
  a.ogse_iterations = int(r.u32());
  a.ogse_converged = r.u8() != 0;

  Matrix h = r.matrix();
  Matrix y_n = r.matrix();

  FitSummary s;
  s.delta_v = r.f64();
  s.delta_h = r.f64();
  s.delta_h_tangent = r.f64();
  s.spectral_gap = r.f64();
  s.ogse_iterations = int(r.u32());
  s.ogse_converged = r.u8() != 0;
  s.ogse_dropped = r.f64();
  s.degenerate_frames = Index(r.u64());
  std::uint64_t n_warn = r.u64();
  if (n_warn > 1024) r.fail();
  for (std::uint64_t i = 0; i < n_warn; ++i) s.warnings.push_back(r.str());

  return GseModel::assemble(std::move(points), hp, std::move(frames), std::move(a), std::move(h),
                            std::move(y_n), std::move(s));
}

}  // namespace gse
