#include <bit>
#include <cstring>
#include <fstream>

#include "rooftop/classifier.hpp"

namespace rooftop {

namespace {

constexpr char kMagic[4] = {'R', 'M', 'D', 'L'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(b), 8);
  }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(b), 4);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void vec(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void mat(const Matrix& m) {
    u64(m.rows);
    u64(m.cols);
    for (double x : m.data) f64(x);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  std::uint64_t u64() {
    unsigned char b[8];
    need(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    need(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    std::string s(u32(), '\0');
    need(s.data(), s.size());
    return s;
  }
  std::size_t count() {
    const std::uint64_t n = u64();
    if (n > (std::uint64_t{1} << 34)) throw ModelError("corrupt model file: implausible length");
    return static_cast<std::size_t>(n);
  }
  std::vector<double> vec() {
    std::vector<double> v(count());
    for (double& x : v) x = f64();
    return v;
  }
  Matrix mat() {
    const std::size_t r = count(), c = count();
    Matrix m(r, c);
    for (double& x : m.data) x = f64();
    return m;
  }

 private:
  void need(void* dst, std::size_t n) {
    if (!in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n))) throw ModelError("truncated model file");
  }
  std::istream& in_;
};

template <typename E>
E enum_from(std::uint32_t v, std::uint32_t count) {
  if (v >= count) throw ModelError("corrupt model file: enum out of range");
  return static_cast<E>(v);
}

}  // namespace

void save_model(const TrainedModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelError("cannot write " + path.string());
  out.write(kMagic, 4);
  Writer w(out);
  w.u32(kVersion);
  const ClassifierSpec& s = m.spec;
  w.u32(static_cast<std::uint32_t>(s.family));
  w.u32(static_cast<std::uint32_t>(s.scaler));
  w.u32(static_cast<std::uint32_t>(s.penalty));
  w.f64(s.C);
  w.u32(static_cast<std::uint32_t>(s.kernel));
  w.f64(s.gamma);
  w.u64(s.hidden.size());
  for (std::size_t h : s.hidden) w.u64(h);
  w.u32(static_cast<std::uint32_t>(s.activation));
  w.u32(static_cast<std::uint32_t>(s.solver));
  w.f64(s.alpha);

  w.u64(m.seed);
  w.u64(m.features);
  w.u64(m.classes.size());
  for (const auto& c : m.classes) w.str(c);
  w.u32(static_cast<std::uint32_t>(m.scaler.kind));
  w.vec(m.scaler.center);
  w.vec(m.scaler.spread);

  if (const auto* p = std::get_if<LogRegParams>(&m.params)) {
    w.mat(p->weights);
    w.vec(p->bias);
  } else if (const auto* p = std::get_if<SvmParams>(&m.params)) {
    w.mat(p->support);
    w.u64(p->machines.size());
    for (const auto& b : p->machines) {
      w.vec(b.coef);
      w.f64(b.rho);
      w.f64(b.platt_a);
      w.f64(b.platt_b);
    }
  } else {
    const auto& mp = std::get<MlpParams>(m.params);
    w.u64(mp.layers.size());
    for (const auto& l : mp.layers) {
      w.mat(l.weights);
      w.vec(l.bias);
    }
  }
  if (!out) throw ModelError("failed writing " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw ModelError(path.string() + " is not a model file");
  Reader r(in);
  if (const auto v = r.u32(); v != kVersion) throw ModelError("unsupported model version " + std::to_string(v));
  TrainedModel m;
  ClassifierSpec& s = m.spec;
  s.family = enum_from<Family>(r.u32(), 3);
  s.scaler = enum_from<ScalerKind>(r.u32(), 3);
  s.penalty = enum_from<Penalty>(r.u32(), 2);
  s.C = r.f64();
  s.kernel = enum_from<KernelKind>(r.u32(), 4);
  s.gamma = r.f64();
  s.hidden.resize(r.count());
  for (auto& h : s.hidden) h = r.count();
  s.activation = enum_from<Activation>(r.u32(), 2);
  s.solver = enum_from<Solver>(r.u32(), 3);
  s.alpha = r.f64();

  m.seed = r.u64();
  m.features = r.count();
  m.classes.resize(r.count());
  for (auto& c : m.classes) c = r.str();
  m.scaler.kind = enum_from<ScalerKind>(r.u32(), 3);
  m.scaler.center = r.vec();
  m.scaler.spread = r.vec();
  const std::size_t k = m.classes.size();
  auto check = [](bool ok) {
    if (!ok) throw ModelError("corrupt model file: inconsistent dimensions");
  };
  check(m.scaler.center.size() == m.features && m.scaler.spread.size() == m.features && k >= 2);

  switch (s.family) {
    case Family::logreg: {
      LogRegParams p;
      p.weights = r.mat();
      p.bias = r.vec();
      check(p.weights.rows == k && p.weights.cols == m.features && p.bias.size() == k);
      m.params = std::move(p);
      break;
    }
    case Family::svm: {
      SvmParams p;
      p.support = r.mat();
      check(p.support.cols == m.features || p.support.rows == 0);
      p.machines.resize(r.count());
      check(p.machines.size() == k);
      for (auto& b : p.machines) {
        b.coef = r.vec();
        b.rho = r.f64();
        b.platt_a = r.f64();
        b.platt_b = r.f64();
        check(b.coef.size() == p.support.rows);
      }
      m.params = std::move(p);
      break;
    }
    case Family::mlp: {
      MlpParams p;
      p.layers.resize(r.count());
      check(p.layers.size() == s.hidden.size() + 1);
      std::size_t in_dim = m.features;
      for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& layer = p.layers[l];
        layer.weights = r.mat();
        layer.bias = r.vec();
        const std::size_t out_dim = l < s.hidden.size() ? s.hidden[l] : k;
        check(layer.weights.rows == out_dim && layer.weights.cols == in_dim && layer.bias.size() == out_dim);
        in_dim = out_dim;
      }
      m.params = std::move(p);
      break;
    }
  }
  return m;
}

}  // namespace rooftop
