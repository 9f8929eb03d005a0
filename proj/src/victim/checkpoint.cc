#include <charconv>
#include <fstream>
#include <sstream>

#include "poisonlab/victim/victim.h"

namespace poisonlab::victim {

namespace {

constexpr const char* kHeader = "poisonlab-victim 1";

void put_double(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, end);
}

void put_values(std::string& out, const std::vector<double>& values, std::size_t per_line) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    put_double(out, values[i]);
    out += (i + 1) % per_line == 0 || i + 1 == values.size() ? '\n' : ' ';
  }
}

void put_matrix(std::string& out, const char* name, const Matrix& m) {
  out += name;
  out += ' ' + std::to_string(m.rows) + ' ' + std::to_string(m.cols) + '\n';
  put_values(out, m.data, m.cols);
}

void put_vector(std::string& out, const char* name, const std::vector<double>& v) {
  out += name;
  out += ' ' + std::to_string(v.size()) + '\n';
  put_values(out, v, v.size());
}

class Reader {
 public:
  explicit Reader(const std::string& text) : in_(text) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw Error("checkpoint truncated");
    return w;
  }

  void expect(const std::string& w) {
    const auto got = word();
    if (got != w) throw Error("checkpoint: expected '" + w + "', got '" + got + "'");
  }

  std::size_t size() {
    const auto w = word();
    std::size_t v = 0;
    auto [end, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || end != w.data() + w.size()) throw Error("checkpoint: bad size '" + w + "'");
    return v;
  }

  double number() {
    const auto w = word();
    double v = 0.0;
    auto [end, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || end != w.data() + w.size()) throw Error("checkpoint: bad number '" + w + "'");
    return v;
  }

  std::string line() {
    std::string l;
    if (!std::getline(in_, l)) throw Error("checkpoint truncated");
    return l;
  }

  Matrix matrix(const char* name) {
    expect(name);
    const auto r = size();
    const auto c = size();
    Matrix m(r, c);
    for (auto& v : m.data) v = number();
    return m;
  }

  std::vector<double> vec(const char* name) {
    expect(name);
    std::vector<double> v(size());
    for (auto& x : v) x = number();
    return v;
  }

 private:
  std::istringstream in_;
};

}  // namespace

std::string serialize(const VictimModel& model) {
  std::string out = kHeader;
  out += '\n';
  out += "max_length " + std::to_string(model.max_length) + '\n';
  out += "vocab " + std::to_string(model.vocab.size()) + '\n';
  for (const auto& tok : model.vocab.entries()) out += tok + '\n';
  put_matrix(out, "embedding", model.embedding);
  put_matrix(out, "w1", model.w1);
  put_vector(out, "b1", model.b1);
  put_matrix(out, "w2", model.w2);
  put_vector(out, "b2", model.b2);
  return out;
}

VictimModel deserialize(const std::string& text) {
  Reader r(text);
  if (r.line() != kHeader) throw Error("not a victim checkpoint");
  VictimModel m;
  r.expect("max_length");
  m.max_length = r.size();
  r.expect("vocab");
  const auto n = r.size();
  r.line();
  std::vector<std::string> entries;
  entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) entries.push_back(r.line());
  m.vocab = Vocabulary(std::move(entries));
  m.embedding = r.matrix("embedding");
  m.w1 = r.matrix("w1");
  m.b1 = r.vec("b1");
  m.w2 = r.matrix("w2");
  m.b2 = r.vec("b2");
  if (m.embedding.rows != m.vocab.size() || m.w1.rows != m.embedding.cols ||
      m.b1.size() != m.w1.cols || m.w2.rows != m.w1.cols || m.w2.cols != kClasses ||
      m.b2.size() != kClasses) {
    throw Error("checkpoint shapes are inconsistent");
  }
  return m;
}

void save_checkpoint(const VictimModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << serialize(model);
}

VictimModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace poisonlab::victim
